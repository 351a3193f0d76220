//! Finite-difference assembly of the American put LCPs.
//!
//! Interior nodes are `S_i = i h`, `i = 1..=N`, with `h = S_max / (N + 1)`.
//! Writing the Black-Scholes operator as `L V = -(1/2 sigma^2 S^2 V_SS +
//! mu(S) S V_S - r V)` and using central differences, row `i` of `L_h` is
//!
//! ```text
//! lower_i = -(sigma^2 i^2 - mu_i i) / 2
//! diag_i  =   sigma^2 i^2 + r
//! upper_i = -(sigma^2 i^2 + mu_i i) / 2
//! ```
//!
//! and a theta-step backwards in time solves the LCP with
//! `A = I + theta k L_h` and `b = (I - (1 - theta) k L_h) x_prev` plus the
//! Dirichlet contributions `V(0) = K`, `V(S_max) = 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LcpError, Result};
use crate::lcp::{norm_or_one, LcpProblem, SolveReport};
use crate::matrix::TridiagSystem;

/// Drift coefficient `mu(S)` of the `mu(S) S V_S` term.
#[derive(Clone, Default)]
pub enum Drift {
    /// `mu(S) = r`.
    #[default]
    RiskNeutral,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::RiskNeutral => f.write_str("RiskNeutral"),
            Drift::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub r: f64,
    pub sigma: f64,
    pub maturity: f64,
    pub strike: f64,
    pub s_max: f64,
    #[serde(skip)]
    pub drift: Drift,
}

impl Default for ModelParams {
    /// r = 0.05, sigma = 0.4, T = 1, K = 100, S_max = 600.
    fn default() -> Self {
        Self {
            r: 0.05,
            sigma: 0.4,
            maturity: 1.0,
            strike: 100.0,
            s_max: 600.0,
            drift: Drift::RiskNeutral,
        }
    }
}

impl ModelParams {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// `sigma == 0` is accepted as a degenerate (pure drift) case.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LcpError::InvalidConfig(msg));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.maturity > 0.0) {
            return bad(format!("maturity must be > 0, got {}", self.maturity));
        }
        if !(self.strike > 0.0) {
            return bad(format!("strike must be > 0, got {}", self.strike));
        }
        if !(self.s_max > self.strike) {
            return bad(format!(
                "S_max must exceed the strike, got S_max = {} and K = {}",
                self.s_max, self.strike
            ));
        }
        if !self.r.is_finite() {
            return bad("r must be finite".into());
        }
        Ok(())
    }

    fn mu(&self, s: f64) -> f64 {
        match &self.drift {
            Drift::RiskNeutral => self.r,
            Drift::Custom(f) => f(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Interior space nodes `N`.
    pub n_space: usize,
    /// Time steps `M`.
    pub n_time: usize,
    /// 1 = fully implicit, 0.5 = Crank-Nicolson.
    pub theta: f64,
}

impl GridSpec {
    pub fn new(n_space: usize, n_time: usize, theta: f64) -> Result<Self> {
        let g = Self {
            n_space,
            n_time,
            theta,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn implicit(n_space: usize, n_time: usize) -> Self {
        Self {
            n_space,
            n_time,
            theta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_space == 0 {
            return Err(LcpError::InvalidConfig("N must be >= 1".into()));
        }
        if self.n_time == 0 {
            return Err(LcpError::InvalidConfig("M must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(LcpError::InvalidConfig(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn h(&self, params: &ModelParams) -> f64 {
        params.s_max / (self.n_space as f64 + 1.0)
    }

    pub fn k(&self, params: &ModelParams) -> f64 {
        params.maturity / self.n_time as f64
    }
}

/// Asset prices at the interior nodes.
pub fn grid_values(params: &ModelParams, grid: &GridSpec) -> Vec<f64> {
    let h = grid.h(params);
    (1..=grid.n_space).map(|i| i as f64 * h).collect()
}

/// `c_i = max(K - S_i, 0)`.
pub fn put_payoff(params: &ModelParams, grid: &GridSpec) -> Vec<f64> {
    grid_values(params, grid)
        .into_iter()
        .map(|s| (params.strike - s).max(0.0))
        .collect()
}

/// 1-based index of the last node at or below the strike, `q = max{i : S_i <= K}`
/// (0 if every node lies above the strike).
pub fn strike_index(params: &ModelParams, grid: &GridSpec) -> usize {
    grid_values(params, grid)
        .iter()
        .rposition(|&s| s <= params.strike)
        .map_or(0, |i| i + 1)
}

/// Spatial operator `L_h` with the boundary coefficients kept separately.
#[derive(Debug, Clone)]
pub struct SpatialOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    /// Coefficient of `V(0)` in the first row.
    pub left_boundary: f64,
    /// Coefficient of `V(S_max)` in the last row.
    pub right_boundary: f64,
}

impl SpatialOperator {
    pub fn new(params: &ModelParams, grid: &GridSpec) -> Self {
        let n = grid.n_space;
        let h = grid.h(params);
        let s2 = params.sigma * params.sigma;
        let mut lower = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for i in 1..=n {
            let fi = i as f64;
            let mu = params.mu(fi * h);
            lower.push(-0.5 * (s2 * fi * fi - mu * fi));
            diag.push(s2 * fi * fi + params.r);
            upper.push(-0.5 * (s2 * fi * fi + mu * fi));
        }
        let left_boundary = lower[0];
        let right_boundary = upper[n - 1];
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        Self {
            lower,
            diag,
            upper,
            left_boundary,
            right_boundary,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// `A = I + theta k L_h`. At `theta = 1` the entries are
/// `-k/2 (sigma^2 i^2 - r i)`, `1 + k (sigma^2 i^2 + r)`, `-k/2 (sigma^2 i^2 + r i)`.
pub fn bs_operator_rows(params: &ModelParams, grid: &GridSpec) -> TridiagSystem {
    let op = SpatialOperator::new(params, grid);
    lhs_from(&op, grid.theta * grid.k(params))
}

fn lhs_from(op: &SpatialOperator, tk: f64) -> TridiagSystem {
    TridiagSystem::new(
        op.lower.iter().map(|v| tk * v).collect(),
        op.diag.iter().map(|v| 1.0 + tk * v).collect(),
        op.upper.iter().map(|v| tk * v).collect(),
    )
    .expect("operator bands are consistent")
}

#[derive(Debug, Clone)]
pub struct TimeStepLcp {
    pub problem: LcpProblem,
    /// 1-based, counting backwards from expiry.
    pub step_index: usize,
    pub grid_values: Vec<f64>,
}

/// The backward sequence of `M` LCPs. Each problem's right-hand side is built
/// from the most recent solution handed to [`LcpSequence::feed`]; before any
/// feed it is the terminal payoff.
#[derive(Debug, Clone)]
pub struct LcpSequence {
    op: SpatialOperator,
    a: TridiagSystem,
    k: f64,
    theta: f64,
    strike: f64,
    payoff: Vec<f64>,
    grid_values: Vec<f64>,
    state: Vec<f64>,
    step: usize,
    n_time: usize,
}

pub fn build_lcp_sequence(params: &ModelParams, grid: &GridSpec) -> Result<LcpSequence> {
    params.validate()?;
    grid.validate()?;
    let op = SpatialOperator::new(params, grid);
    let k = grid.k(params);
    let a = lhs_from(&op, grid.theta * k);
    let payoff = put_payoff(params, grid);
    Ok(LcpSequence {
        op,
        a,
        k,
        theta: grid.theta,
        strike: params.strike,
        state: payoff.clone(),
        payoff,
        grid_values: grid_values(params, grid),
        step: 0,
        n_time: grid.n_time,
    })
}

impl LcpSequence {
    pub fn matrix(&self) -> &TridiagSystem {
        &self.a
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    pub fn time_step(&self) -> f64 {
        self.k
    }

    /// Values at the previous time level (the payoff before the first feed).
    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Records the solution of the problem most recently yielded.
    pub fn feed(&mut self, solution: Vec<f64>) {
        assert_eq!(solution.len(), self.state.len(), "solution length");
        self.state = solution;
    }

    fn rhs(&self) -> Vec<f64> {
        let mut rhs = self.state.clone();
        if self.theta < 1.0 {
            let explicit = (1.0 - self.theta) * self.k;
            for (r, l) in rhs.iter_mut().zip(self.op.apply(&self.state)) {
                *r -= explicit * l;
            }
        }
        // V(0) = K on both time levels; V(S_max) = 0 contributes nothing.
        rhs[0] -= self.k * self.op.left_boundary * self.strike;
        rhs
    }
}

impl Iterator for LcpSequence {
    type Item = TimeStepLcp;

    fn next(&mut self) -> Option<TimeStepLcp> {
        if self.step >= self.n_time {
            return None;
        }
        self.step += 1;
        let problem = LcpProblem::new(self.a.clone(), self.rhs(), self.payoff.clone())
            .expect("consistent dims");
        Some(TimeStepLcp {
            problem,
            step_index: self.step,
            grid_values: self.grid_values.clone(),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.n_time - self.step;
        (left, Some(left))
    }
}

/// 2x2 matrix of a two-interior-node discretisation with an arbitrary drift:
///
/// ```text
/// [ 1 + k/h^2 s^2 S1^2 + r                    -k/(2h^2) s^2 S1^2 - k/(2h) mu1 S1 ]
/// [ -k/(2h^2) s^2 S2^2 + k/(2h) mu2 S2         1 + k/h^2 s^2 S2^2 + r            ]
/// ```
///
/// The diagonal carries `+ r` without a factor `k`, as written in the source
/// formula. A strongly negative `mu1` and positive `mu2` make both
/// off-diagonals positive.
#[allow(clippy::too_many_arguments)]
pub fn funny_drift_2x2(
    sigma: f64,
    r: f64,
    k: f64,
    h: f64,
    s1: f64,
    s2: f64,
    mu1: f64,
    mu2: f64,
) -> TridiagSystem {
    let s2sq = sigma * sigma;
    let diff = |s: f64| k / (h * h) * s2sq * s * s;
    TridiagSystem::new(
        vec![0.0, -0.5 * diff(s2) + k / (2.0 * h) * mu2 * s2],
        vec![1.0 + diff(s1) + r, 1.0 + diff(s2) + r],
        vec![-0.5 * diff(s1) - k / (2.0 * h) * mu1 * s1, 0.0],
    )
    .expect("2x2 bands are consistent")
}

/// Discrete exercise boundary: the smallest 1-based row whose PDE residual
/// `|(A x - b)_i| / ||b||_inf` is at most `tol`, or `n + 1` if there is none.
pub fn exercise_boundary_index(problem: &LcpProblem, report: &SolveReport, tol: f64) -> usize {
    let nb = norm_or_one(problem.rhs());
    let x = &report.solution;
    let a = problem.matrix();
    (0..problem.n())
        .find(|&i| ((a.row_dot(i, x) - problem.rhs()[i]) / nb).abs() <= tol)
        .map_or(problem.n() + 1, |i| i + 1)
}
