//! Fixed LCP instances used by tests, the CLI and the benchmarks.

use crate::lcp::LcpProblem;
use crate::matrix::{DenseMatrix, TridiagSystem};

/// The non-M-matrix instance `A = [[6, 8], [16, 8]]`, `b = (58, 64)`,
/// `c = (1, 5)`. Its unique solution is `(3, 5)`; policy iteration started
/// from `A^{-1} b = (0.6, 6.8)` cycles between `(0.6, 6.8)` and `(1, 6)`.
pub fn counterexample_2x2() -> LcpProblem {
    let a = DenseMatrix::from_rows(vec![vec![6.0, 8.0], vec![16.0, 8.0]]).expect("2x2");
    LcpProblem::new(a, vec![58.0, 64.0], vec![1.0, 5.0]).expect("consistent dims")
}

/// Starting value `w = A^{-1} b` of the cycling run.
pub const COUNTEREXAMPLE_START: [f64; 2] = [0.6, 6.8];
pub const COUNTEREXAMPLE_SOLUTION: [f64; 2] = [3.0, 5.0];
/// The other iterate of the period-2 cycle.
pub const COUNTEREXAMPLE_PARTNER: [f64; 2] = [1.0, 6.0];

/// `A = I`, `b = 0`, `c = 1`: solution is the obstacle itself.
pub fn identity_obstacle(n: usize) -> LcpProblem {
    LcpProblem::new(TridiagSystem::identity(n), vec![0.0; n], vec![1.0; n])
        .expect("consistent dims")
}
