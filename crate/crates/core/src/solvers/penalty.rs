//! Semi-smooth Newton iterations for the two penalised problems.
//!
//! Both variants solve, at every step, a system whose penalised rows read
//! `(A)_i x + rho x_i = b_i + rho c_i` and whose other rows are `(A)_i x = b_i`.
//! They differ only in how the penalised rows are chosen:
//!
//! * `MaxPenalty`: rows with `x_i < c_i` (strict; equality leaves the
//!   penalty off).
//! * `MinPenalty`: rows where the greedy LCP policy picks the exercise
//!   branch. The PDE rows of `(A + rho A^n) x = b + rho b^n` are
//!   `(1 + rho) (A)_i x = (1 + rho) b_i` and are stored divided through.
//!
//! The iteration stops once the penalty policy repeats, at which point the
//! iterate solves the penalised equation exactly.

use crate::error::{sup_dist, LcpError, Result};
use crate::lcp::{
    greedy_policy_unchecked, is_solved, IterationRecord, LcpProblem, PolicyVector, SolveReport,
    SolverConfig, StoppingRule,
};
use crate::matrix::{dense_solve, Matrix};

use super::thomas::{solve_rows, ZERO_PIVOT_THRESHOLD};
use super::{check_start, PenaltyConfig, PenaltyVariant, Recent};

pub fn penalty_newton_solve(
    p: &LcpProblem,
    x0: &[f64],
    cfg: &SolverConfig,
    pen: &PenaltyConfig,
) -> Result<SolveReport> {
    penalty_newton_solve_with_observer(p, x0, cfg, pen, |_, _| {})
}

pub fn penalty_newton_solve_with_observer<F>(
    p: &LcpProblem,
    x0: &[f64],
    cfg: &SolverConfig,
    pen: &PenaltyConfig,
    mut observe: F,
) -> Result<SolveReport>
where
    F: FnMut(usize, &[f64]),
{
    check_start(p, x0, cfg)?;
    pen.validate()?;
    let mut x = x0.to_vec();
    let mut phi = penalty_policy(p, &x, cfg, pen.variant);
    let mut recent = Recent::default();
    recent.push(&x);
    let mut trace = Vec::new();

    for it in 1..=cfg.max_iter {
        let next = solve_penalised(p, &phi, pen.rho)?;
        observe(it, &next);
        let step_diff = sup_dist(&next, &x);
        let next_phi = penalty_policy(p, &next, cfg, pen.variant);
        let policy_changes = next_phi.changes_from(&phi);
        trace.push(IterationRecord {
            step_diff,
            policy_changes,
        });
        recent.push(&next);
        x = next;

        let stop = match cfg.stopping {
            StoppingRule::PolicyFixedPoint => policy_changes == 0,
            StoppingRule::ResidualTest => policy_changes == 0 || is_solved(p, &x, cfg.tol),
            StoppingRule::IterateDiff => step_diff <= cfg.tol,
        };
        if stop {
            return Ok(SolveReport::finish(p, x, it, true, phi, trace, cfg.tol));
        }
        phi = next_phi;
    }
    let report = SolveReport::finish(p, x, cfg.max_iter, false, phi, trace, cfg.tol);
    Err(recent.into_error(report))
}

/// `true` marks an unpenalised (PDE) row.
fn penalty_policy(
    p: &LcpProblem,
    x: &[f64],
    cfg: &SolverConfig,
    variant: PenaltyVariant,
) -> PolicyVector {
    match variant {
        PenaltyVariant::MaxPenalty => PolicyVector::new(
            x.iter()
                .zip(p.obstacle())
                .map(|(xi, ci)| !(xi < ci))
                .collect(),
        ),
        PenaltyVariant::MinPenalty => greedy_policy_unchecked(p, x, cfg.tie_break),
    }
}

fn solve_penalised(p: &LcpProblem, phi: &PolicyVector, rho: f64) -> Result<Vec<f64>> {
    let n = p.n();
    let (b, c) = (p.rhs(), p.obstacle());
    for i in (0..n).filter(|&i| !phi.is_pde(i)) {
        let d = p.matrix().diag_entry(i) + rho;
        if !d.is_finite() || !(rho * c[i]).is_finite() {
            return Err(LcpError::IllConditioned { row: i });
        }
    }
    match p.matrix() {
        Matrix::Tridiag(t) => {
            let (l, d, u) = (t.lower(), t.diag(), t.upper());
            solve_rows(n, ZERO_PIVOT_THRESHOLD, |i| {
                if phi.is_pde(i) {
                    (l[i], d[i], u[i], b[i])
                } else {
                    (l[i], d[i] + rho, u[i], b[i] + rho * c[i])
                }
            })
        }
        Matrix::Dense(m) => {
            let mut rows = m.to_rows();
            let mut rhs = b.to_vec();
            for i in (0..n).filter(|&i| !phi.is_pde(i)) {
                rows[i][i] += rho;
                rhs[i] += rho * c[i];
            }
            dense_solve(rows, rhs)
        }
    }
}
