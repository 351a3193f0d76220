//! Linear complementarity solvers for American option pricing.
//!
//! The crate solves problems of the form
//!
//! ```text
//! A x >= b,   x >= c,   (A x - b)_i (x - c)_i = 0 for every i
//! ```
//!
//! equivalently `min{A x - b, x - c} = 0`, with policy iteration, projected
//! SOR, penalty Newton iterations and a penalty/policy hybrid. The
//! [`discretize`] module turns the Black–Scholes American put into a backward
//! sequence of such problems and [`pricer`] drives the solvers through it.
//!
//! ```
//! use lcp_pricer::{fixtures, policy_solve, SolverConfig};
//!
//! let p = fixtures::identity_obstacle(4);
//! let report = policy_solve(&p, &[0.0; 4], &SolverConfig::default()).unwrap();
//! assert_eq!(report.solution, vec![1.0; 4]);
//! ```

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod discretize;
pub mod error;
pub mod fixtures;
pub mod instances;
pub mod io;
pub mod lcp;
pub mod matrix;
pub mod pricer;
pub mod solvers;

pub use discretize::{build_lcp_sequence, GridSpec, LcpSequence, ModelParams};
pub use error::{LcpError, NonConvergence, Result};
pub use lcp::{
    apply_policy, greedy_policy, is_m_matrix_candidate, is_solved, min_residual, LcpProblem,
    PolicyVector, SolveReport, SolverConfig, StoppingRule, TieBreak,
};
pub use matrix::{DenseMatrix, Matrix, TridiagSystem};
pub use pricer::{iteration_accounting_check, price_american, PricingRun, SolverKind};
pub use solvers::{
    brute_force_oracle, hybrid_solve, penalty_newton_solve, policy_solve,
    policy_solve_with_observer, psor_solve, thomas_solve, PenaltyConfig, PenaltyVariant,
};
