//! Tridiagonal Gaussian elimination.
//!
//! [`solve_rows`] takes a row accessor instead of stored bands so that the
//! policy and penalty iterations can substitute rows on the fly, exactly as
//! the fused "modified Thomas" loop does, without materialising `A^phi`.

use crate::error::{LcpError, Result};
use crate::matrix::TridiagSystem;

/// Pivots with magnitude below this are treated as exact zeros.
pub const ZERO_PIVOT_THRESHOLD: f64 = 1e-300;

/// A single row `(lower, diag, upper, rhs)`.
pub(crate) type Row = (f64, f64, f64, f64);

pub fn thomas_solve(a: &TridiagSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    thomas_solve_with_threshold(a, rhs, ZERO_PIVOT_THRESHOLD)
}

pub fn thomas_solve_with_threshold(
    a: &TridiagSystem,
    rhs: &[f64],
    threshold: f64,
) -> Result<Vec<f64>> {
    crate::lcp::check_len("rhs", a.n(), rhs.len())?;
    let (l, d, u) = (a.lower(), a.diag(), a.upper());
    solve_rows(a.n(), threshold, |i| (l[i], d[i], u[i], rhs[i]))
}

pub(crate) fn solve_rows<F>(n: usize, threshold: f64, mut row: F) -> Result<Vec<f64>>
where
    F: FnMut(usize) -> Row,
{
    let mut upper = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut prev_upper = 0.0;
    let mut prev_rhs = 0.0;
    for i in 0..n {
        let (l, d, u, r) = row(i);
        let (pivot, r) = if i == 0 {
            (d, r)
        } else {
            (d - l * prev_upper, r - l * prev_rhs)
        };
        if !(pivot.abs() >= threshold) || !pivot.is_finite() {
            return Err(LcpError::ZeroPivot { row: i });
        }
        prev_upper = u / pivot;
        prev_rhs = r / pivot;
        upper[i] = prev_upper;
        x[i] = prev_rhs;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= upper[i] * x[i + 1];
    }
    Ok(x)
}
