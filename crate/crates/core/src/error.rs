use thiserror::Error;

use crate::lcp::SolveReport;

pub type Result<T, E = LcpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LcpError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid tridiagonal system: {0}")]
    InvalidTridiag(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("zero pivot in row {row}")]
    ZeroPivot { row: usize },

    #[error("singular matrix")]
    Singular,

    #[error("penalised system is ill-conditioned at row {row}")]
    IllConditioned { row: usize },

    #[error("no convergence after {} iterations", .0.iterations)]
    NotConverged(Box<NonConvergence>),

    #[error("no candidate policy solves the LCP")]
    NoSolution,

    #[error("{count} distinct candidate policies solve the LCP")]
    MultipleSolutions { count: usize },

    #[error("problem size {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<LcpError>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Diagnostic payload carried by [`LcpError::NotConverged`].
#[derive(Debug, Clone)]
pub struct NonConvergence {
    pub iterations: usize,
    /// Up to the last three iterates, oldest first.
    pub recent: Vec<Vec<f64>>,
    /// Report for the final iterate (with `converged == false`).
    pub report: SolveReport,
}

impl NonConvergence {
    /// The last two iterates `(x^{n-1}, x^n)` if at least two were produced.
    pub fn last_two(&self) -> Option<(&[f64], &[f64])> {
        match self.recent.as_slice() {
            [.., a, b] => Some((a.as_slice(), b.as_slice())),
            _ => None,
        }
    }

    /// True when the iteration is stuck in a period-2 cycle: `x^n == x^{n-2}`
    /// to 1e-12 while `x^n` and `x^{n-1}` differ.
    pub fn is_period_two_cycle(&self) -> bool {
        match self.recent.as_slice() {
            [a, b, c] => sup_dist(a, c) < 1e-12 && sup_dist(b, c) > 1e-9,
            _ => false,
        }
    }
}

pub(crate) fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
