//! Policy iteration (Howard's algorithm) for the LCP.
//!
//! Each step picks, row by row, the more violated of the two inequalities
//! at the current iterate and solves that row with equality. For an
//! M-matrix the iterates increase monotonically from `x^1` on and, with the
//! PDE-preferring tie-break, terminate after at most `n + 1` solves.

use std::collections::HashSet;

use crate::error::{sup_dist, Result};
use crate::lcp::{
    apply_policy, greedy_policy_unchecked, is_solved, IterationRecord, LcpProblem, PolicyVector,
    SolveReport, SolverConfig, StoppingRule,
};
use crate::matrix::{dense_solve, Matrix};

use super::thomas::{solve_rows, ZERO_PIVOT_THRESHOLD};
use super::{check_start, Recent};

pub fn policy_solve(p: &LcpProblem, x0: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    policy_solve_with_observer(p, x0, cfg, |_, _| {})
}

/// [`policy_solve`] that hands every new iterate `x^n` (n >= 1) to `observe`.
pub fn policy_solve_with_observer<F>(
    p: &LcpProblem,
    x0: &[f64],
    cfg: &SolverConfig,
    mut observe: F,
) -> Result<SolveReport>
where
    F: FnMut(usize, &[f64]),
{
    check_start(p, x0, cfg)?;
    let mut x = x0.to_vec();
    let mut phi = greedy_policy_unchecked(p, &x, cfg.tie_break);
    let mut recent = Recent::default();
    recent.push(&x);
    // The update is a deterministic function of the policy, so revisiting a
    // policy means the iterates cycle from here on.
    let mut seen = HashSet::from([phi.clone()]);
    let mut trace = Vec::new();

    for it in 1..=cfg.max_iter {
        let next = solve_with_policy(p, &phi)?;
        observe(it, &next);
        let step_diff = sup_dist(&next, &x);
        let next_phi = greedy_policy_unchecked(p, &next, cfg.tie_break);
        let policy_changes = next_phi.changes_from(&phi);
        trace.push(IterationRecord {
            step_diff,
            policy_changes,
        });
        recent.push(&next);
        x = next;

        let repeated = !seen.insert(next_phi.clone());
        let solved = is_solved(p, &x, cfg.tol);
        let stop = solved
            && match cfg.stopping {
                StoppingRule::ResidualTest => true,
                StoppingRule::IterateDiff => step_diff <= cfg.tol,
                StoppingRule::PolicyFixedPoint => policy_changes == 0,
            };
        let stalled = cfg.stopping == StoppingRule::IterateDiff && step_diff <= cfg.tol;
        let stuck = !solved && (repeated || stalled);
        if stop {
            return Ok(SolveReport::finish(p, x, it, true, phi, trace, cfg.tol));
        }
        if stuck {
            let report = SolveReport::finish(p, x, it, false, phi, trace, cfg.tol);
            return Err(recent.into_error(report));
        }
        phi = next_phi;
    }
    let report = SolveReport::finish(p, x, cfg.max_iter, false, phi, trace, cfg.tol);
    Err(recent.into_error(report))
}

/// Solves `A^phi x = b^phi`. The tridiagonal path substitutes identity rows
/// inside the elimination sweep instead of building `A^phi`.
pub(crate) fn solve_with_policy(p: &LcpProblem, phi: &PolicyVector) -> Result<Vec<f64>> {
    match p.matrix() {
        Matrix::Tridiag(t) => {
            let (l, d, u) = (t.lower(), t.diag(), t.upper());
            let (b, c) = (p.rhs(), p.obstacle());
            solve_rows(p.n(), ZERO_PIVOT_THRESHOLD, |i| {
                if phi.is_pde(i) {
                    (l[i], d[i], u[i], b[i])
                } else {
                    (0.0, 1.0, 0.0, c[i])
                }
            })
        }
        Matrix::Dense(_) => {
            let (a, rhs) = apply_policy(p, phi)?;
            dense_solve(a.to_dense_rows(), rhs)
        }
    }
}
