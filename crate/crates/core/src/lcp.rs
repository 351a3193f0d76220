//! Problem data, residuals and termination tests shared by every solver.
//!
//! An LCP instance `(A, b, c)` asks for `x` with
//!
//! ```text
//! A x >= b,   x >= c,   (A x - b)_i (x - c)_i = 0   for every row i,
//! ```
//!
//! or equivalently `min{A x - b, x - c} = 0` row-wise. A row whose first
//! branch is active is a continuation (PDE) row, one whose second branch is
//! active is an exercise row.

use serde::{Deserialize, Serialize};

use crate::error::{LcpError, Result};
use crate::matrix::{DenseMatrix, Matrix, TridiagSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcpProblem {
    a: Matrix,
    rhs: Vec<f64>,
    obstacle: Vec<f64>,
}

impl LcpProblem {
    pub fn new(a: impl Into<Matrix>, rhs: Vec<f64>, obstacle: Vec<f64>) -> Result<Self> {
        let a = a.into();
        let n = a.n();
        check_len("rhs", n, rhs.len())?;
        check_len("obstacle", n, obstacle.len())?;
        Ok(Self { a, rhs, obstacle })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn obstacle(&self) -> &[f64] {
        &self.obstacle
    }

    /// `A x - b`.
    pub fn pde_residual(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.a.row_dot(i, x) - self.rhs[i])
            .collect()
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(LcpError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Per-row binary control: `true` (1) selects the PDE row, `false` (0) the
/// exercise row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyVector(Vec<bool>);

impl PolicyVector {
    pub fn new(phi: Vec<bool>) -> Self {
        Self(phi)
    }

    /// Parses a 0/1 vector; any other value is rejected.
    pub fn from_binary(values: &[u8]) -> Result<Self> {
        values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(LcpError::InvalidConfig(format!(
                    "policy entries must be 0 or 1, found {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn all_pde(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn all_exercise(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn is_pde(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn to_binary(&self) -> Vec<u8> {
        self.0.iter().map(|&p| u8::from(p)).collect()
    }

    /// Number of rows where `self` and `other` differ.
    pub fn changes_from(&self, other: &PolicyVector) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn pde_rows(&self) -> usize {
        self.0.iter().filter(|&&p| p).count()
    }
}

/// Which branch wins when `(A x - b)_i == (x - c)_i` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    #[default]
    PreferPde,
    PreferExercise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StoppingRule {
    /// Stop as soon as the normalised three-part LCP test passes.
    ResidualTest,
    /// Stop when `||x^{n+1} - x^n||_inf <= tol` (one confirming solve).
    IterateDiff,
    /// Stop when the greedy policy of the new iterate equals the policy that
    /// produced it, and the LCP test passes there.
    #[default]
    PolicyFixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub tie_break: TieBreak,
    pub stopping: StoppingRule,
    /// PSOR relaxation parameter, in (0, 2).
    pub omega: f64,
    /// Scaled penalty parameter; time-stepping drivers use `rho = rho_prime / k`.
    pub rho_prime: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            tie_break: TieBreak::PreferPde,
            stopping: StoppingRule::PolicyFixedPoint,
            omega: 1.0,
            rho_prime: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0) {
            return Err(LcpError::InvalidConfig(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(LcpError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(LcpError::InvalidConfig(format!(
                "omega must lie in (0, 2), got {}",
                self.omega
            )));
        }
        if !(self.rho_prime > 0.0) {
            return Err(LcpError::InvalidConfig(format!(
                "rho_prime must be > 0, got {}",
                self.rho_prime
            )));
        }
        Ok(())
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_stopping(mut self, stopping: StoppingRule) -> Self {
        self.stopping = stopping;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// `||x^{n} - x^{n-1}||_inf`.
    pub step_diff: f64,
    /// Rows whose policy changed relative to the previous iteration.
    pub policy_changes: usize,
}

/// Iteration split of a two-phase solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSplit {
    pub penalty_iterations: usize,
    pub policy_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// Linear solves (policy, penalty, hybrid) or sweeps (PSOR).
    pub iterations: usize,
    pub converged: bool,
    /// `||min{A x - b, x - c}||_inf` at `solution`.
    pub residual_norm: f64,
    /// Whether `solution` passes [`is_solved`] at the configured tolerance.
    /// Always equal to `converged` for the exact solvers; penalty solvers
    /// converge to the penalised solution, which may miss it by O(1/rho).
    pub lcp_satisfied: bool,
    pub policy: PolicyVector,
    pub trace: Vec<IterationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseSplit>,
}

impl SolveReport {
    pub(crate) fn finish(
        p: &LcpProblem,
        solution: Vec<f64>,
        iterations: usize,
        converged: bool,
        policy: PolicyVector,
        trace: Vec<IterationRecord>,
        tol: f64,
    ) -> Self {
        let residual_norm = sup_norm(&min_residual_unchecked(p, &solution));
        let lcp_satisfied = is_solved(p, &solution, tol);
        Self {
            solution,
            iterations,
            converged,
            residual_norm,
            lcp_satisfied,
            policy,
            trace,
            phases: None,
        }
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn min_residual_unchecked(p: &LcpProblem, x: &[f64]) -> Vec<f64> {
    (0..p.n())
        .map(|i| (p.a.row_dot(i, x) - p.rhs[i]).min(x[i] - p.obstacle[i]))
        .collect()
}

/// `r_i = min{(A x - b)_i, (x - c)_i}`.
pub fn min_residual(p: &LcpProblem, x: &[f64]) -> Result<Vec<f64>> {
    check_len("x", p.n(), x.len())?;
    Ok(min_residual_unchecked(p, x))
}

/// Normalised termination test: `(A x - b)/||b|| >= -tol`,
/// `(x - c)/||c|| >= -tol`, and per row one of the two is within `tol` of
/// zero. A zero norm is replaced by 1. A wrong-length `x` is never solved.
pub fn is_solved(p: &LcpProblem, x: &[f64], tol: f64) -> bool {
    if x.len() != p.n() {
        return false;
    }
    let nb = norm_or_one(&p.rhs);
    let nc = norm_or_one(&p.obstacle);
    (0..p.n()).all(|i| {
        let pde = (p.a.row_dot(i, x) - p.rhs[i]) / nb;
        let ex = (x[i] - p.obstacle[i]) / nc;
        pde >= -tol && ex >= -tol && (pde.abs() <= tol || ex.abs() <= tol)
    })
}

pub(crate) fn norm_or_one(v: &[f64]) -> f64 {
    let n = sup_norm(v);
    if n > 0.0 {
        n
    } else {
        1.0
    }
}

/// Builds `(A^phi, b^phi)`: PDE rows are copied from `(A, b)`, exercise rows
/// become identity rows with right-hand side `c_i`.
pub fn apply_policy(p: &LcpProblem, phi: &PolicyVector) -> Result<(Matrix, Vec<f64>)> {
    check_len("policy", p.n(), phi.len())?;
    let n = p.n();
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            if phi.is_pde(i) {
                p.rhs[i]
            } else {
                p.obstacle[i]
            }
        })
        .collect();
    let a = match &p.a {
        Matrix::Tridiag(t) => {
            let mut lower = t.lower().to_vec();
            let mut diag = t.diag().to_vec();
            let mut upper = t.upper().to_vec();
            for i in (0..n).filter(|&i| !phi.is_pde(i)) {
                lower[i] = 0.0;
                diag[i] = 1.0;
                upper[i] = 0.0;
            }
            Matrix::Tridiag(TridiagSystem::new(lower, diag, upper)?)
        }
        Matrix::Dense(d) => {
            let mut rows = d.to_rows();
            for (i, row) in rows.iter_mut().enumerate() {
                if !phi.is_pde(i) {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = 1.0;
                }
            }
            Matrix::Dense(DenseMatrix::from_rows(rows)?)
        }
    };
    Ok((a, rhs))
}

/// Row-wise argmin of `{(A x - b)_i, (x - c)_i}`; exact ties go to `tie_break`.
pub fn greedy_policy(p: &LcpProblem, x: &[f64], tie_break: TieBreak) -> Result<PolicyVector> {
    check_len("x", p.n(), x.len())?;
    Ok(greedy_policy_unchecked(p, x, tie_break))
}

pub(crate) fn greedy_policy_unchecked(
    p: &LcpProblem,
    x: &[f64],
    tie_break: TieBreak,
) -> PolicyVector {
    let phi = (0..p.n())
        .map(|i| {
            let pde = p.a.row_dot(i, x) - p.rhs[i];
            let ex = x[i] - p.obstacle[i];
            if pde == ex {
                tie_break == TieBreak::PreferPde
            } else {
                pde < ex
            }
        })
        .collect();
    PolicyVector(phi)
}

/// Sufficient M-matrix test for a tridiagonal matrix: positive diagonal,
/// nonpositive off-diagonals, nonnegative row sums, and every row linked
/// through nonzero off-diagonals to a row with a strictly positive sum
/// (weak chained diagonal dominance). The last condition rules out
/// decoupled blocks with zero row sums, which are singular.
pub fn is_m_matrix_candidate(a: &TridiagSystem) -> bool {
    let n = a.n();
    let (l, d, u) = (a.lower(), a.diag(), a.upper());
    let mut strict = vec![false; n];
    for i in 0..n {
        if !(d[i] > 0.0) || l[i] > 0.0 || u[i] > 0.0 {
            return false;
        }
        let sum = d[i] + l[i] + u[i];
        if sum < 0.0 {
            return false;
        }
        strict[i] = sum > 0.0;
    }
    // A chain from row i to a strict row runs monotonically left or right.
    let mut left = strict.clone();
    for i in 1..n {
        left[i] |= l[i] != 0.0 && left[i - 1];
    }
    let mut right = strict;
    for i in (0..n.saturating_sub(1)).rev() {
        right[i] |= u[i] != 0.0 && right[i + 1];
    }
    left.iter().zip(&right).all(|(a, b)| *a || *b)
}

/// Dense analogue of [`is_m_matrix_candidate`] for the small-matrix path.
pub fn is_m_matrix_candidate_dense(a: &DenseMatrix) -> bool {
    let n = a.n();
    let mut good = vec![false; n];
    for (i, g) in good.iter_mut().enumerate() {
        if !(a.get(i, i) > 0.0) {
            return false;
        }
        if (0..n).any(|j| j != i && a.get(i, j) > 0.0) {
            return false;
        }
        let sum: f64 = a.row(i).iter().sum();
        if sum < 0.0 {
            return false;
        }
        *g = sum > 0.0;
    }
    // Propagate reachability of a strictly dominant row along nonzero entries.
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !good[i] && (0..n).any(|j| j != i && a.get(i, j) != 0.0 && good[j]) {
                good[i] = true;
                changed = true;
            }
        }
    }
    good.iter().all(|&g| g)
}
