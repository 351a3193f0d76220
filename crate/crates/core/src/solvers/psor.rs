//! Projected successive over-relaxation.
//!
//! One sweep updates the rows in order, in place:
//! `x_i <- max(c_i, x_i + omega * ((b_i - sum_{j != i} a_ij x_j) / a_ii - x_i))`.

use crate::error::{sup_dist, LcpError, Result};
use crate::lcp::{
    greedy_policy_unchecked, is_solved, IterationRecord, LcpProblem, SolveReport, SolverConfig,
    StoppingRule,
};
use crate::matrix::Matrix;

use super::{check_start, Recent};

pub fn psor_solve(p: &LcpProblem, x0: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    check_start(p, x0, cfg)?;
    let n = p.n();
    let a = p.matrix();
    if let Some(row) = (0..n).find(|&i| !(a.diag_entry(i) > 0.0)) {
        return Err(LcpError::InvalidConfig(format!(
            "PSOR needs a positive diagonal; row {row} has {}",
            a.diag_entry(row)
        )));
    }
    let (b, c) = (p.rhs(), p.obstacle());
    let omega = cfg.omega;
    let mut x = x0.to_vec();
    let mut prev = x.clone();
    let mut recent = Recent::default();
    recent.push(&x);
    let mut trace = Vec::new();
    let mut prev_phi = greedy_policy_unchecked(p, &x, cfg.tie_break);

    for it in 1..=cfg.max_iter {
        prev.copy_from_slice(&x);
        sweep(a, b, c, omega, &mut x);
        let step_diff = sup_dist(&x, &prev);
        let phi = greedy_policy_unchecked(p, &x, cfg.tie_break);
        trace.push(IterationRecord {
            step_diff,
            policy_changes: phi.changes_from(&prev_phi),
        });
        prev_phi = phi;
        if !x.iter().all(|v| v.is_finite()) {
            recent.push(&x);
            break;
        }
        let stop = match cfg.stopping {
            StoppingRule::IterateDiff => step_diff <= cfg.tol && is_solved(p, &x, cfg.tol),
            StoppingRule::ResidualTest | StoppingRule::PolicyFixedPoint => {
                is_solved(p, &x, cfg.tol)
            }
        };
        if stop {
            return Ok(SolveReport::finish(
                p, x, it, true, prev_phi, trace, cfg.tol,
            ));
        }
        recent.push(&x);
    }
    let iterations = trace.len();
    let report = SolveReport::finish(p, x, iterations, false, prev_phi, trace, cfg.tol);
    Err(recent.into_error(report))
}

/// One in-place projected Gauss-Seidel sweep with relaxation `omega`.
pub(crate) fn sweep(a: &Matrix, b: &[f64], c: &[f64], omega: f64, x: &mut [f64]) {
    let n = x.len();
    match a {
        Matrix::Tridiag(t) => {
            let (l, d, u) = (t.lower(), t.diag(), t.upper());
            for i in 0..n {
                let mut off = 0.0;
                if i > 0 {
                    off += l[i] * x[i - 1];
                }
                if i + 1 < n {
                    off += u[i] * x[i + 1];
                }
                let gs = (b[i] - off) / d[i];
                x[i] = c[i].max(x[i] + omega * (gs - x[i]));
            }
        }
        Matrix::Dense(m) => {
            for i in 0..n {
                let off = m.row_dot(i, x) - m.get(i, i) * x[i];
                let gs = (b[i] - off) / m.get(i, i);
                x[i] = c[i].max(x[i] + omega * (gs - x[i]));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::identity_obstacle;
    use crate::matrix::TridiagSystem;

    #[test]
    fn obstacle_solution_in_one_sweep() {
        let p = identity_obstacle(6);
        let r = psor_solve(&p, &[1.0; 6], &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.solution, vec![1.0; 6]);
    }

    #[test]
    fn unconstrained_system_converges_to_linear_solution() {
        let a = TridiagSystem::from_bands(vec![-1.0; 5], vec![3.0; 5], vec![-1.0; 5]).unwrap();
        let b = vec![1.0, 2.0, 3.0, 2.0, 1.0];
        let exact = crate::solvers::thomas_solve(&a, &b).unwrap();
        let p = LcpProblem::new(a, b, vec![-100.0; 5]).unwrap();
        for omega in [0.8, 1.0, 1.3] {
            let r = psor_solve(
                &p,
                &[0.0; 5],
                &SolverConfig::default().with_omega(omega).with_tol(1e-12),
            )
            .unwrap();
            assert!(sup_dist(&r.solution, &exact) < 1e-10, "omega {omega}");
        }
    }

    #[test]
    fn rejects_nonpositive_diagonal() {
        let a = TridiagSystem::new(vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let p = LcpProblem::new(a, vec![0.0; 2], vec![0.0; 2]).unwrap();
        assert!(psor_solve(&p, &[0.0; 2], &SolverConfig::default()).is_err());
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let a = TridiagSystem::from_bands(vec![-1.0; 50], vec![2.001; 50], vec![-1.0; 50]).unwrap();
        let p = LcpProblem::new(a, vec![1.0; 50], vec![0.0; 50]).unwrap();
        let err =
            psor_solve(&p, &[0.0; 50], &SolverConfig::default().with_max_iter(3)).unwrap_err();
        match err {
            LcpError::NotConverged(nc) => {
                assert_eq!(nc.iterations, 3);
                assert!(!nc.is_period_two_cycle());
            }
            other => panic!("unexpected {other}"),
        }
    }
}
