//! Exhaustive policy enumeration: every LCP solution is `A^phi x = b^phi`
//! for some policy `phi`, so trying all `2^n` of them finds it.

use crate::error::{sup_dist, LcpError, Result};
use crate::lcp::{apply_policy, is_solved, LcpProblem, PolicyVector};
use crate::matrix::dense_solve;

pub const ORACLE_MAX_N: usize = 16;
pub const ORACLE_TOL: f64 = 1e-10;

/// Returns the unique solution among all policy candidates. Each candidate
/// system is solved by dense elimination, independently of the tridiagonal
/// kernel.
pub fn brute_force_oracle(p: &LcpProblem) -> Result<Vec<f64>> {
    let n = p.n();
    if n > ORACLE_MAX_N {
        return Err(LcpError::TooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let phi = PolicyVector::new((0..n).map(|i| mask & (1 << i) != 0).collect());
        let (a, b) = apply_policy(p, &phi)?;
        let x = match dense_solve(a.to_dense_rows(), b) {
            Ok(x) => x,
            Err(LcpError::Singular) => continue,
            Err(e) => return Err(e),
        };
        if !is_solved(p, &x, ORACLE_TOL) {
            continue;
        }
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !found.iter().any(|y| sup_dist(y, &x) <= 1e-8 * scale) {
            found.push(x);
        }
    }
    match found.len() {
        0 => Err(LcpError::NoSolution),
        1 => Ok(found.pop().expect("one element")),
        count => Err(LcpError::MultipleSolutions { count }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{counterexample_2x2, identity_obstacle, COUNTEREXAMPLE_SOLUTION};
    use crate::matrix::DenseMatrix;

    #[test]
    fn counterexample_solution() {
        let x = brute_force_oracle(&counterexample_2x2()).unwrap();
        assert!(sup_dist(&x, &COUNTEREXAMPLE_SOLUTION) < 1e-12);
    }

    #[test]
    fn identity_obstacle_solution() {
        assert_eq!(
            brute_force_oracle(&identity_obstacle(4)).unwrap(),
            vec![1.0; 4]
        );
    }

    #[test]
    fn too_large() {
        assert!(matches!(
            brute_force_oracle(&identity_obstacle(17)),
            Err(LcpError::TooLarge { .. })
        ));
    }

    #[test]
    fn no_solution_without_p_matrix() {
        // A = [[-1]], b = 1, c = 0: need -x >= 1 and x >= 0.
        let a = DenseMatrix::from_rows(vec![vec![-1.0]]).unwrap();
        let p = LcpProblem::new(a, vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(brute_force_oracle(&p), Err(LcpError::NoSolution)));
    }

    #[test]
    fn multiple_solutions_without_p_matrix() {
        // A = [[-1]], b = -1, c = 0: x = 0 (exercise) and x = 1 (PDE) both solve.
        let a = DenseMatrix::from_rows(vec![vec![-1.0]]).unwrap();
        let p = LcpProblem::new(a, vec![-1.0], vec![0.0]).unwrap();
        assert!(matches!(
            brute_force_oracle(&p),
            Err(LcpError::MultipleSolutions { count: 2 })
        ));
    }
}
