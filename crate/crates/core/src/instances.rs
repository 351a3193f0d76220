//! Seeded generator for random tridiagonal M-matrix LCPs.
//!
//! Off-diagonals are drawn from `U[-1, 0]` and the diagonal is
//! `1 + |lower| + |upper| + U[0, 1]`, so every row is strictly diagonally
//! dominant with a positive row sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lcp::LcpProblem;
use crate::matrix::TridiagSystem;

#[derive(Debug)]
pub struct RandomLcps {
    rng: ChaCha8Rng,
}

impl RandomLcps {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn m_matrix(&mut self, n: usize) -> TridiagSystem {
        let mut lower: Vec<f64> = (0..n).map(|_| -self.rng.gen::<f64>()).collect();
        let mut upper: Vec<f64> = (0..n).map(|_| -self.rng.gen::<f64>()).collect();
        lower[0] = 0.0;
        upper[n - 1] = 0.0;
        let diag = (0..n)
            .map(|i| 1.0 + lower[i].abs() + upper[i].abs() + self.rng.gen::<f64>())
            .collect();
        TridiagSystem::new(lower, diag, upper).expect("generated bands are consistent")
    }

    /// An LCP with `b, c ~ U[-1, 1]`, which typically mixes exercise and
    /// continuation rows.
    pub fn problem(&mut self, n: usize) -> LcpProblem {
        let a = self.m_matrix(n);
        let rhs = (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
        let obstacle = (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
        LcpProblem::new(a, rhs, obstacle).expect("consistent dims")
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.rng.gen_range(lo..hi)).collect()
    }

    pub fn size(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        self.rng.gen_range(lo..=hi_inclusive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcp::is_m_matrix_candidate;

    #[test]
    fn generated_matrices_pass_candidate_check() {
        let mut g = RandomLcps::new(7);
        for n in 1..40 {
            assert!(is_m_matrix_candidate(&g.m_matrix(n)));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = RandomLcps::new(42).problem(9);
        let b = RandomLcps::new(42).problem(9);
        assert_eq!(a, b);
    }
}
