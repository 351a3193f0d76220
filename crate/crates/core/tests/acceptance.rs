//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are printed as they are
//! produced. The process fails if any criterion outside `KNOWN_RED` fails,
//! or if a supporting assertion attached to a known-red criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lcp_pricer::bench::{
    figure1_scan, oracle_cross_check, penalty_limit_probe, psor_rate_probe, BenchConfig, KMode,
    ScenarioReport,
};
use lcp_pricer::discretize::put_payoff;
use lcp_pricer::fixtures::{
    counterexample_2x2, COUNTEREXAMPLE_PARTNER, COUNTEREXAMPLE_SOLUTION, COUNTEREXAMPLE_START,
};
use lcp_pricer::instances::RandomLcps;
use lcp_pricer::{
    brute_force_oracle, build_lcp_sequence, iteration_accounting_check, policy_solve,
    policy_solve_with_observer, price_american, GridSpec, LcpError, LcpProblem, ModelParams,
    Result, SolverConfig, SolverKind,
};

/// Criteria expected to fail, with the reason recorded in the decisions
/// ledger. They are reported but do not fail the run.
const KNOWN_RED: &[u32] = &[8];

/// Corpus shared by the first two criteria.
const ORACLE_SEED: u64 = 20240611;
const ORACLE_CASES: usize = 200;
const ORACLE_N: (usize, usize) = (2, 12);

struct Outcome {
    passed: bool,
    detail: String,
    /// Supporting assertions that must hold even for a known-red criterion.
    support_ok: bool,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
            support_ok: true,
        }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    let start = Instant::now();
    let mut outcome = f().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
    let elapsed = start.elapsed();
    outcome
        .detail
        .push_str(&format!("; {:.2} s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        if elapsed > limit {
            outcome.passed = false;
            outcome
                .detail
                .push_str(&format!(" exceeds {} s", limit.as_secs()));
        }
    }
    outcome
}

fn checks_pass(report: &ScenarioReport, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut details = Vec::new();
    for name in names {
        match report.check(name) {
            Some(c) => {
                ok &= c.passed;
                details.push(format!("{}: {}", c.name, c.detail));
            }
            None => {
                ok = false;
                details.push(format!("{name}: missing"));
            }
        }
    }
    (ok, details.join("; "))
}

fn oracle_corpus() -> Vec<LcpProblem> {
    let mut gen = RandomLcps::new(ORACLE_SEED);
    (0..ORACLE_CASES)
        .map(|_| {
            let n = gen.size(ORACLE_N.0, ORACLE_N.1);
            gen.problem(n)
        })
        .collect()
}

/// Runs policy iteration from `x0` and checks `x^{n+1} >= x^n` exactly for
/// `n >= 1` and at most `n + 1` solves. Returns the iteration count.
fn monotone_run(
    p: &LcpProblem,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<std::result::Result<usize, String>> {
    let mut prev: Option<Vec<f64>> = None;
    let mut violation = None;
    let report = policy_solve_with_observer(p, x0, cfg, |it, x| {
        if let Some(prev) = &prev {
            if violation.is_none() {
                if let Some(i) = x.iter().zip(prev).position(|(a, b)| a < b) {
                    violation = Some(format!("iterate {it} decreased at row {i}"));
                }
            }
        }
        prev = Some(x.to_vec());
    })?;
    if let Some(v) = violation {
        return Ok(Err(v));
    }
    if !report.lcp_satisfied {
        return Ok(Err("solution fails the LCP test".into()));
    }
    if report.iterations > p.n() + 1 {
        return Ok(Err(format!(
            "{} iterations for n = {}",
            report.iterations,
            p.n()
        )));
    }
    Ok(Ok(report.iterations))
}

fn criterion_1() -> Result<Outcome> {
    let report = oracle_cross_check(
        ORACLE_SEED,
        ORACLE_CASES,
        ORACLE_N,
        &SolverConfig::default(),
    )?;
    let detail = report
        .checks
        .iter()
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::new(report.all_passed(), detail))
}

fn criterion_2() -> Result<Outcome> {
    let cfg = SolverConfig::default();
    for (case, p) in oracle_corpus().iter().enumerate() {
        if let Err(v) = monotone_run(p, p.obstacle(), &cfg)? {
            return Ok(Outcome::new(false, format!("random case {case}: {v}")));
        }
    }
    let params = ModelParams::default();
    let mut worst = 0;
    let mut solves = 0;
    for n in [100, 200, 400, 800] {
        for m in [1, n] {
            let grid = GridSpec::implicit(n, m);
            let mut seq = build_lcp_sequence(&params, &grid)?;
            let mut x = put_payoff(&params, &grid);
            while let Some(step) = seq.next() {
                match monotone_run(&step.problem, &x, &cfg)? {
                    Ok(it) => worst = worst.max(it),
                    Err(v) => {
                        return Ok(Outcome::new(
                            false,
                            format!("put N={n} M={m} step {}: {v}", step.step_index),
                        ))
                    }
                }
                solves += 1;
                x = policy_solve(&step.problem, &x, &cfg)?.solution;
                seq.feed(x.clone());
            }
        }
    }
    Ok(Outcome::new(
        true,
        format!("{ORACLE_CASES} random LCPs and {solves} put steps (N <= 800): monotone, max {worst} iterations"),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let p = counterexample_2x2();
    let close = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-12);
    let mut hit_solution = false;
    let outcome = policy_solve_with_observer(
        &p,
        &COUNTEREXAMPLE_START,
        &SolverConfig::default(),
        |_, x| {
            hit_solution |= close(x, &COUNTEREXAMPLE_SOLUTION);
        },
    );
    let oracle = brute_force_oracle(&p)?;
    let oracle_ok = close(&oracle, &COUNTEREXAMPLE_SOLUTION);
    match outcome {
        Err(LcpError::NotConverged(nc)) => {
            let pair_ok = nc.last_two().is_some_and(|(a, b)| {
                (close(a, &COUNTEREXAMPLE_START) && close(b, &COUNTEREXAMPLE_PARTNER))
                    || (close(a, &COUNTEREXAMPLE_PARTNER) && close(b, &COUNTEREXAMPLE_START))
            });
            let passed = nc.is_period_two_cycle() && pair_ok && !hit_solution && oracle_ok;
            Ok(Outcome::new(
                passed,
                format!(
                    "cycle detected after {} iterations between (0.6, 6.8) and (1, 6): {}; reached z: {hit_solution}; oracle {:?}",
                    nc.iterations, pair_ok, oracle
                ),
            ))
        }
        Err(e) => Ok(Outcome::new(false, format!("unexpected error: {e}"))),
        Ok(r) => Ok(Outcome::new(
            false,
            format!("converged to {:?}", r.solution),
        )),
    }
}

fn criterion_4() -> Result<Outcome> {
    let ns: Vec<usize> = (100..=800).step_by(100).collect();
    let bench = BenchConfig {
        timing_repeats: 1,
        ..BenchConfig::default()
    };
    let report = figure1_scan(&ModelParams::default(), &ns, &bench)?;
    let (ok, detail) = checks_pass(&report, &["linear fit R^2 >= 0.99", "N=200 count"]);
    Ok(Outcome::new(ok, detail))
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol + 1e-12
}

fn criterion_5() -> Result<Outcome> {
    let params = ModelParams::default();
    let cfg = SolverConfig::default();
    let diag = price_american(
        &params,
        &GridSpec::implicit(800, 800),
        SolverKind::Policy,
        &cfg,
    )?;
    let wide = price_american(
        &params,
        &GridSpec::implicit(800, 100),
        SolverKind::Policy,
        &cfg,
    )?;
    let (dm, da) = (diag.max_iterations() as f64, diag.avg_iterations());
    let (wm, wa) = (wide.max_iterations() as f64, wide.avg_iterations());
    let passed = within(dm, 6.0, 1.0)
        && within(da, 1.07, 0.05)
        && within(wm, 14.0, 1.0)
        && within(wa, 1.54, 0.08);
    Ok(Outcome::new(
        passed,
        format!(
            "M=N=800: {dm}/{da:.4} ({:.3} s) vs 6±1/1.07±0.05; M=100 N=800: {wm}/{wa:.4} vs 14±1/1.54±0.08",
            diag.runtime.as_secs_f64()
        ),
    ))
}

fn criterion_6() -> Result<Outcome> {
    let params = ModelParams::default();
    let cfg = SolverConfig::default();
    let mut passed = true;
    let mut parts = Vec::new();
    for theta in [1.0, 0.5] {
        let mut avgs = Vec::new();
        for n in (100..=800).step_by(100) {
            let run = price_american(
                &params,
                &GridSpec::new(n, n, theta)?,
                SolverKind::Policy,
                &cfg,
            )?;
            let avg = run.avg_iterations();
            passed &= (1.0..=1.15).contains(&avg);
            avgs.push(format!("{avg:.4}"));
        }
        parts.push(format!("theta={theta}: [{}]", avgs.join(", ")));
    }
    Ok(Outcome::new(
        passed,
        format!("{} all in [1.00, 1.15]", parts.join("; ")),
    ))
}

fn criterion_7() -> Result<Outcome> {
    let cfg = SolverConfig::default();
    let mut counts = Vec::new();
    let mut passed = true;
    for (sigma, target) in [(0.2, 6.0), (0.4, 13.0), (0.8, 23.0)] {
        let params = ModelParams::default().with_sigma(sigma);
        let run = price_american(
            &params,
            &GridSpec::implicit(200, 1),
            SolverKind::Policy,
            &cfg,
        )?;
        let c = run.max_iterations() as f64;
        passed &= within(c, target, 1.0);
        counts.push(c);
    }
    let ratio = counts[2] / counts[0];
    passed &= (3.2..=4.5).contains(&ratio);
    Ok(Outcome::new(
        passed,
        format!("counts {counts:?} vs [6, 13, 23] ± 1; ratio 0.8/0.2 = {ratio:.3} in [3.2, 4.5]"),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let params = ModelParams::default();
    let run = price_american(
        &params,
        &GridSpec::implicit(200, 200),
        SolverKind::Policy,
        &SolverConfig::default(),
    )?;
    let (predicted, observed) = iteration_accounting_check(&run);
    let q = run.strike_index as i64;
    let e = run.final_boundary() as i64;
    let m = run.per_step.len() as i64;
    let moved = run.moved_steps() as i64;
    // Every step costs its boundary shift plus one confirming solve.
    let identity = observed == q - e + m;
    let mut outcome = Outcome::new(
        predicted == observed,
        format!(
            "q={q} e={e} M={m} m={moved}: q-e+(M-m) = {predicted}, observed {observed}; \
             observed = q-e+M holds: {identity} (see decisions ledger)"
        ),
    );
    outcome.support_ok = identity;
    Ok(outcome)
}

fn criterion_9() -> Result<Outcome> {
    let bench = BenchConfig {
        timing_repeats: 1,
        ..BenchConfig::default()
    };
    let report = penalty_limit_probe(
        &ModelParams::default(),
        &[1e2, 1e3, 1e4, 1e5],
        200,
        200,
        &bench,
    )?;
    let (ok, detail) = checks_pass(
        &report,
        &[
            "error slope vs rho",
            "hybrid policy phase = 1 at rho = h^-2",
        ],
    );
    Ok(Outcome::new(ok, format!("M=N=200, first step: {detail}")))
}

fn criterion_10() -> Result<Outcome> {
    let bench = BenchConfig {
        timing_repeats: 1,
        ..BenchConfig::default()
    };
    let report = psor_rate_probe(
        &ModelParams::default(),
        &[50, 100, 200, 400, 800],
        KMode::FixedKOverH,
        &bench,
    )?;
    let ratio_checks: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.name.contains("sqrt 2"))
        .collect();
    let omega_checks: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.name.contains("omega_opt"))
        .collect();
    let passed = !ratio_checks.is_empty() && !omega_checks.is_empty() && report.all_passed();
    let detail = report
        .checks
        .iter()
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome::new(passed, detail))
}

/// Id, name, optional runtime limit in seconds, and the check itself.
type Criterion = (u32, &'static str, Option<u64>, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "oracle equivalence", Some(10), criterion_1),
        (2, "monotone finite termination", None, criterion_2),
        (3, "counterexample oscillation", None, criterion_3),
        (
            4,
            "linear growth of single-step iterations",
            Some(30),
            criterion_4,
        ),
        (5, "reference grid diagonal", Some(60), criterion_5),
        (
            6,
            "constant average along M=N, both schemes",
            None,
            criterion_6,
        ),
        (7, "volatility proportionality", None, criterion_7),
        (8, "iteration accounting", None, criterion_8),
        (9, "penalty limit rate and hybrid", None, criterion_9),
        (10, "PSOR asymptotics", None, criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, f) in criteria {
        let outcome = timed(limit.map(Duration::from_secs), f);
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        let note = if !outcome.passed && KNOWN_RED.contains(&id) {
            " [known red]"
        } else {
            ""
        };
        println!(
            "[{status}] criterion {id:>2} {name}{note}: {}",
            outcome.detail
        );
        if (!outcome.passed && !KNOWN_RED.contains(&id)) || !outcome.support_ok {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
