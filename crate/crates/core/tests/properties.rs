//! Randomised invariants of the solvers on tridiagonal M-matrix LCPs.

use lcp_pricer::lcp::{greedy_policy, is_m_matrix_candidate_dense};
use lcp_pricer::matrix::DenseMatrix;
use lcp_pricer::{
    brute_force_oracle, hybrid_solve, is_m_matrix_candidate, is_solved, penalty_newton_solve,
    policy_solve, policy_solve_with_observer, psor_solve, thomas_solve, LcpProblem, PenaltyConfig,
    PenaltyVariant, SolverConfig, TieBreak, TridiagSystem,
};
use proptest::prelude::*;

/// Strictly diagonally dominant tridiagonal M-matrix LCP of size `n`.
fn m_matrix_lcp(max_n: usize) -> impl Strategy<Value = LcpProblem> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0..=0.0f64, n),
            prop::collection::vec(-1.0..=0.0f64, n),
            prop::collection::vec(0.01..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(-1.0..1.0f64, n),
        )
            .prop_map(move |(mut lower, mut upper, extra, b, c)| {
                lower[0] = 0.0;
                upper[n - 1] = 0.0;
                let diag = (0..n).map(|i| -lower[i] - upper[i] + extra[i]).collect();
                let a = TridiagSystem::new(lower, diag, upper).unwrap();
                LcpProblem::new(a, b, c).unwrap()
            })
    })
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn policy_iterates_increase_and_terminate_within_n_plus_one(
        p in m_matrix_lcp(40),
        start in prop::collection::vec(-2.0..2.0f64, 40),
    ) {
        let n = p.n();
        let x0 = &start[..n];
        let mut iterates: Vec<Vec<f64>> = Vec::new();
        let r = policy_solve_with_observer(&p, x0, &SolverConfig::default(), |_, x| iterates.push(x.to_vec()))
            .unwrap();
        prop_assert!(r.converged && r.lcp_satisfied);
        prop_assert!(r.iterations <= n + 1, "{} iterations for n = {n}", r.iterations);
        for w in iterates.windows(2) {
            for (i, (a, b)) in w[0].iter().zip(&w[1]).enumerate() {
                prop_assert!(b >= a, "row {i}: {b} < {a}");
            }
        }
    }

    #[test]
    fn policy_matches_oracle(p in m_matrix_lcp(12)) {
        let exact = brute_force_oracle(&p).unwrap();
        let r = policy_solve(&p, p.obstacle(), &SolverConfig::default()).unwrap();
        prop_assert!(sup_dist(&r.solution, &exact) <= 1e-9);
    }

    #[test]
    fn solvers_agree(p in m_matrix_lcp(30)) {
        let cfg = SolverConfig::default();
        let x0 = p.obstacle().to_vec();
        let exact = policy_solve(&p, &x0, &cfg).unwrap().solution;
        let psor = psor_solve(&p, &x0, &cfg.with_omega(1.2)).unwrap();
        prop_assert!(sup_dist(&psor.solution, &exact) <= 1e-6);
        let pen = PenaltyConfig::new(1e8, PenaltyVariant::MaxPenalty).unwrap();
        let hybrid = hybrid_solve(&p, &x0, &cfg, &pen).unwrap();
        prop_assert!(hybrid.lcp_satisfied);
        prop_assert!(sup_dist(&hybrid.solution, &exact) <= 1e-9);
        for variant in [PenaltyVariant::MaxPenalty, PenaltyVariant::MinPenalty] {
            let r = penalty_newton_solve(&p, &x0, &cfg, &PenaltyConfig::new(1e8, variant).unwrap()).unwrap();
            prop_assert!(sup_dist(&r.solution, &exact) <= 1e-6, "{variant:?}");
        }
    }

    /// At the solution every row is either on the obstacle or satisfies the
    /// PDE row, and the greedy policy labels the rows accordingly.
    #[test]
    fn exercise_region_is_consistent(p in m_matrix_lcp(30)) {
        let tol = 1e-9;
        let r = policy_solve(&p, p.obstacle(), &SolverConfig::default()).unwrap();
        let x = &r.solution;
        let ax = p.matrix().mul_vec(x);
        let phi = greedy_policy(&p, x, TieBreak::PreferPde).unwrap();
        for i in 0..p.n() {
            let pde = ax[i] - p.rhs()[i];
            let gap = x[i] - p.obstacle()[i];
            prop_assert!(pde >= -tol && gap >= -tol);
            prop_assert!(pde.abs() <= tol || gap.abs() <= tol, "row {i}: pde {pde}, gap {gap}");
            if phi.is_pde(i) {
                prop_assert!(pde.abs() <= tol);
            } else {
                prop_assert!(gap.abs() <= tol);
            }
        }
    }

    /// Any matrix passing the sufficient test has an entrywise nonnegative
    /// inverse. Bands include exact zeros so reducible cases are exercised.
    #[test]
    fn m_matrix_candidates_have_nonnegative_inverse(
        n in 1usize..10,
        seed in prop::collection::vec((-2i8..=1, 0i8..=3, -2i8..=1), 10),
    ) {
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { f64::from(seed[i].0) * 0.5 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { f64::from(seed[i].2) * 0.5 }).collect();
        let diag: Vec<f64> = (0..n).map(|i| f64::from(seed[i].1) * 0.5).collect();
        let a = TridiagSystem::new(lower, diag, upper).unwrap();
        let dense = DenseMatrix::from_rows(a.to_dense()).unwrap();
        prop_assert_eq!(is_m_matrix_candidate(&a), is_m_matrix_candidate_dense(&dense));
        if is_m_matrix_candidate(&a) {
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let col = thomas_solve(&a, &e).unwrap();
                prop_assert!(col.iter().all(|v| *v >= 0.0 && v.is_finite()), "column {j}: {col:?}");
            }
        }
    }

    #[test]
    fn solved_iff_oracle_solution(p in m_matrix_lcp(8), shift in -0.5..0.5f64) {
        let exact = brute_force_oracle(&p).unwrap();
        prop_assert!(is_solved(&p, &exact, 1e-9));
        if shift.abs() > 1e-3 {
            let moved: Vec<f64> = exact.iter().map(|v| v + shift).collect();
            prop_assert!(!is_solved(&p, &moved, 1e-9));
        }
    }
}
