//! LCP solvers: policy iteration, projected SOR, the two penalty Newton
//! iterations, the penalty-then-policy hybrid, and the exhaustive
//! enumeration oracle. All of them share the tridiagonal kernel in
//! [`thomas`].

mod hybrid;
mod oracle;
mod penalty;
mod policy;
mod psor;
pub mod thomas;

use serde::{Deserialize, Serialize};

use crate::error::{LcpError, NonConvergence, Result};
use crate::lcp::{check_len, LcpProblem, SolveReport, SolverConfig};

pub use hybrid::hybrid_solve;
pub use oracle::{brute_force_oracle, ORACLE_MAX_N, ORACLE_TOL};
pub use penalty::{penalty_newton_solve, penalty_newton_solve_with_observer};
pub use policy::{policy_solve, policy_solve_with_observer};
pub use psor::psor_solve;
pub(crate) use psor::sweep as psor_sweep;
pub use thomas::{thomas_solve, thomas_solve_with_threshold, ZERO_PIVOT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyVariant {
    /// `A x - b - rho * max{c - x, 0} = 0`, Newton policy `x_i < c_i`.
    MaxPenalty,
    /// `A x - b + rho * min{A x - b, x - c} = 0`, Newton policy from the
    /// greedy LCP policy.
    MinPenalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub rho: f64,
    pub variant: PenaltyVariant,
}

impl PenaltyConfig {
    pub fn new(rho: f64, variant: PenaltyVariant) -> Result<Self> {
        let cfg = Self { rho, variant };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho > 0.0 && self.rho.is_finite() {
            Ok(())
        } else {
            Err(LcpError::InvalidConfig(format!(
                "penalty parameter must be positive and finite, got {}",
                self.rho
            )))
        }
    }
}

fn check_start(p: &LcpProblem, x0: &[f64], cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    check_len("x0", p.n(), x0.len())
}

/// Keeps the three most recent iterates for cycle diagnosis.
#[derive(Debug, Default)]
struct Recent(Vec<Vec<f64>>);

impl Recent {
    fn push(&mut self, x: &[f64]) {
        if self.0.len() == 3 {
            self.0.remove(0);
        }
        self.0.push(x.to_vec());
    }

    fn into_error(self, report: SolveReport) -> LcpError {
        LcpError::NotConverged(Box::new(NonConvergence {
            iterations: report.iterations,
            recent: self.0,
            report,
        }))
    }
}
