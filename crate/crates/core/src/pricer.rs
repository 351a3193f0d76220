//! Backward time-stepping driver with per-step iteration accounting.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::discretize::{
    build_lcp_sequence, exercise_boundary_index, strike_index, GridSpec, ModelParams,
};
use crate::error::{LcpError, Result};
use crate::lcp::{SolveReport, SolverConfig};
use crate::solvers::{
    hybrid_solve, penalty_newton_solve, policy_solve, psor_solve, PenaltyConfig, PenaltyVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Policy,
    Psor,
    PenaltyMax,
    PenaltyMin,
    Hybrid,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Policy,
        SolverKind::Psor,
        SolverKind::PenaltyMax,
        SolverKind::PenaltyMin,
        SolverKind::Hybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Policy => "policy",
            SolverKind::Psor => "psor",
            SolverKind::PenaltyMax => "penalty-max",
            SolverKind::PenaltyMin => "penalty-min",
            SolverKind::Hybrid => "hybrid",
        }
    }

    /// Whether the solver returns an exact LCP solution (as opposed to a
    /// penalised approximation).
    pub fn is_exact(self) -> bool {
        !matches!(self, SolverKind::PenaltyMax | SolverKind::PenaltyMin)
    }
}

impl std::str::FromStr for SolverKind {
    type Err = LcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "policy" => Ok(SolverKind::Policy),
            "psor" => Ok(SolverKind::Psor),
            "penalty" | "penalty-max" => Ok(SolverKind::PenaltyMax),
            "penalty-min" => Ok(SolverKind::PenaltyMin),
            "hybrid" => Ok(SolverKind::Hybrid),
            other => Err(LcpError::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

/// Solves one LCP with the chosen method. Penalty-based methods use
/// `rho = rho_prime / k`; the hybrid uses the max-penalty phase.
pub fn solve_step(
    kind: SolverKind,
    problem: &crate::lcp::LcpProblem,
    x0: &[f64],
    cfg: &SolverConfig,
    k: f64,
) -> Result<SolveReport> {
    let rho = cfg.rho_prime / k;
    match kind {
        SolverKind::Policy => policy_solve(problem, x0, cfg),
        SolverKind::Psor => psor_solve(problem, x0, cfg),
        SolverKind::PenaltyMax => penalty_newton_solve(
            problem,
            x0,
            cfg,
            &PenaltyConfig::new(rho, PenaltyVariant::MaxPenalty)?,
        ),
        SolverKind::PenaltyMin => penalty_newton_solve(
            problem,
            x0,
            cfg,
            &PenaltyConfig::new(rho, PenaltyVariant::MinPenalty)?,
        ),
        SolverKind::Hybrid => hybrid_solve(
            problem,
            x0,
            cfg,
            &PenaltyConfig::new(rho, PenaltyVariant::MaxPenalty)?,
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iterations: usize,
    /// 1-based discrete exercise boundary `e_m`.
    pub boundary_index: usize,
    /// `e_m != e_{m-1}`, with `e_0 = q`.
    pub boundary_moved: bool,
    pub lcp_satisfied: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricingRun {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub solver: SolverKind,
    pub omega: f64,
    pub per_step: Vec<StepRecord>,
    /// Option values at `t = 0` on the interior nodes.
    pub value_t0: Vec<f64>,
    pub grid_values: Vec<f64>,
    pub total_iterations: usize,
    /// 1-based strike node `q`.
    pub strike_index: usize,
    #[serde(with = "duration_ms")]
    pub runtime: Duration,
}

impl PricingRun {
    pub fn max_iterations(&self) -> usize {
        self.per_step
            .iter()
            .map(|s| s.iterations)
            .max()
            .unwrap_or(0)
    }

    pub fn avg_iterations(&self) -> f64 {
        self.total_iterations as f64 / self.per_step.len().max(1) as f64
    }

    /// Steps in which the discrete free boundary moved.
    pub fn moved_steps(&self) -> usize {
        self.per_step.iter().filter(|s| s.boundary_moved).count()
    }

    pub fn final_boundary(&self) -> usize {
        self.per_step
            .last()
            .map_or(self.strike_index, |s| s.boundary_index)
    }

    /// Linear interpolation of `value_t0` at asset price `s`, using the
    /// Dirichlet values `V(0) = K` and `V(S_max) = 0` beyond the interior.
    pub fn value_at(&self, s: f64) -> f64 {
        let n = self.value_t0.len();
        let h = self.params.s_max / (n + 1) as f64;
        let node = |j: usize| match j {
            0 => self.params.strike,
            j if j > n => 0.0,
            j => self.value_t0[j - 1],
        };
        let pos = (s / h).clamp(0.0, (n + 1) as f64);
        let j = (pos.floor() as usize).min(n);
        let t = pos - j as f64;
        node(j) * (1.0 - t) + node(j + 1) * t
    }
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(ms.max(0.0) / 1e3))
    }
}

/// Prices the American put by solving every time step's LCP, seeding each
/// solve with the previous step's solution (the payoff at the first step).
pub fn price_american(
    params: &ModelParams,
    grid: &GridSpec,
    solver: SolverKind,
    cfg: &SolverConfig,
) -> Result<PricingRun> {
    cfg.validate()?;
    let start = Instant::now();
    let mut seq = build_lcp_sequence(params, grid)?;
    let k = seq.time_step();
    let q = strike_index(params, grid);
    let mut per_step = Vec::with_capacity(grid.n_time);
    let mut prev_boundary = q;
    let mut x = seq.payoff().to_vec();
    let mut grid_values = Vec::new();

    while let Some(step) = seq.next() {
        let report = solve_step(solver, &step.problem, &x, cfg, k).map_err(|e| LcpError::Step {
            step: step.step_index,
            source: Box::new(e),
        })?;
        let boundary_index = exercise_boundary_index(&step.problem, &report, cfg.tol);
        per_step.push(StepRecord {
            iterations: report.iterations,
            boundary_index,
            boundary_moved: boundary_index != prev_boundary,
            lcp_satisfied: report.lcp_satisfied,
        });
        prev_boundary = boundary_index;
        x = report.solution;
        seq.feed(x.clone());
        if grid_values.is_empty() {
            grid_values = step.grid_values;
        }
    }
    let total_iterations = per_step.iter().map(|s| s.iterations).sum();
    Ok(PricingRun {
        params: params.clone(),
        grid: *grid,
        solver,
        omega: cfg.omega,
        per_step,
        value_t0: x,
        grid_values,
        total_iterations,
        strike_index: q,
        runtime: start.elapsed(),
    })
}

/// `(predicted, observed)` total policy iterations, where
/// `predicted = q - e_M + (M - m)` and `m` counts steps whose boundary moved.
pub fn iteration_accounting_check(run: &PricingRun) -> (i64, i64) {
    let q = run.strike_index as i64;
    let e = run.final_boundary() as i64;
    let m_total = run.per_step.len() as i64;
    let moved = run.moved_steps() as i64;
    (q - e + (m_total - moved), run.total_iterations as i64)
}
