//! Penalty Newton followed by policy iteration seeded with the penalised
//! solution. For large enough `rho` the penalised solution already has the
//! right exercise set and the policy phase needs a single solve.

use crate::error::{LcpError, Result};
use crate::lcp::{LcpProblem, PhaseSplit, SolveReport, SolverConfig};

use super::{penalty_newton_solve, policy_solve, PenaltyConfig};

pub fn hybrid_solve(
    p: &LcpProblem,
    x0: &[f64],
    cfg: &SolverConfig,
    pen: &PenaltyConfig,
) -> Result<SolveReport> {
    let penalised = penalty_newton_solve(p, x0, cfg, pen)?;
    let penalty_iterations = penalised.iterations;
    let mut report = match policy_solve(p, &penalised.solution, cfg) {
        Ok(r) => r,
        Err(LcpError::NotConverged(mut nc)) => {
            nc.report.phases = Some(PhaseSplit {
                penalty_iterations,
                policy_iterations: nc.report.iterations,
            });
            nc.report.iterations += penalty_iterations;
            nc.iterations = nc.report.iterations;
            return Err(LcpError::NotConverged(nc));
        }
        Err(e) => return Err(e),
    };
    let mut trace = penalised.trace;
    trace.append(&mut report.trace);
    report.trace = trace;
    report.phases = Some(PhaseSplit {
        penalty_iterations,
        policy_iterations: report.iterations,
    });
    report.iterations += penalty_iterations;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::sup_dist;
    use crate::matrix::TridiagSystem;
    use crate::solvers::{penalty_newton_solve, PenaltyVariant};

    #[test]
    fn unconstrained_case_one_iteration_per_phase() {
        let a = TridiagSystem::from_bands(vec![-1.0; 5], vec![2.5; 5], vec![-1.0; 5]).unwrap();
        let p = LcpProblem::new(a, vec![1.0; 5], vec![-10.0; 5]).unwrap();
        let pen = PenaltyConfig::new(1e6, PenaltyVariant::MaxPenalty).unwrap();
        let cfg = SolverConfig::default();
        let r = hybrid_solve(&p, &[0.0; 5], &cfg, &pen).unwrap();
        let phases = r.phases.unwrap();
        assert_eq!(phases.penalty_iterations, 1);
        assert_eq!(phases.policy_iterations, 1);
        assert_eq!(r.iterations, 2);
        let pr = penalty_newton_solve(&p, &[0.0; 5], &cfg, &pen).unwrap();
        assert!(sup_dist(&pr.solution, &r.solution) < 1e-14);
    }
}
