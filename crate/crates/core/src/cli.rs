//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a solver did not converge,
//! 3 a benchmark or cross-check reported a failed check.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, BenchConfig, KMode, ScenarioReport};
use crate::discretize::{put_payoff, GridSpec, ModelParams};
use crate::error::{LcpError, NonConvergence};
use crate::io::{self, SolveOutput};
use crate::lcp::{LcpProblem, SolveReport, SolverConfig};
use crate::matrix::Matrix;
use crate::pricer::{iteration_accounting_check, price_american, SolverKind};
use crate::solvers::{
    brute_force_oracle, hybrid_solve, penalty_newton_solve, policy_solve, psor_solve, thomas_solve,
    PenaltyConfig, PenaltyVariant,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lcp-pricer",
    version,
    about = "LCP solvers and American put pricing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price an American put by backward time stepping.
    Price(PriceArgs),
    /// Solve a standalone LCP read from a file.
    SolveLcp(SolveArgs),
    /// Run a benchmark scenario.
    Bench(BenchArgs),
    /// Cross-check every solver against exhaustive enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Interest rate.
    #[arg(long = "r", default_value_t = 0.05, allow_negative_numbers = true)]
    pub r: f64,
    /// Volatility.
    #[arg(long, default_value_t = 0.4)]
    pub sigma: f64,
    /// Maturity.
    #[arg(long = "T", default_value_t = 1.0)]
    pub maturity: f64,
    /// Strike.
    #[arg(long = "K", default_value_t = 100.0)]
    pub strike: f64,
    /// Upper truncation of the asset price domain.
    #[arg(long = "Smax", default_value_t = 600.0)]
    pub s_max: f64,
}

impl ModelArgs {
    fn params(&self) -> ModelParams {
        ModelParams {
            r: self.r,
            sigma: self.sigma,
            maturity: self.maturity,
            strike: self.strike,
            s_max: self.s_max,
            ..ModelParams::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Termination tolerance of the normalised residual test.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Iteration cap per LCP.
    #[arg(long = "max-iter", default_value_t = 100_000)]
    pub max_iter: usize,
    /// PSOR relaxation parameter.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Penalty scale; the penalty parameter is rho' / k.
    #[arg(long = "rho-prime", default_value_t = 1e6)]
    pub rho_prime: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            omega: self.omega,
            rho_prime: self.rho_prime,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    Policy,
    Psor,
    #[value(alias = "penalty")]
    PenaltyMax,
    PenaltyMin,
    Hybrid,
}

impl From<SolverChoice> for SolverKind {
    fn from(c: SolverChoice) -> Self {
        match c {
            SolverChoice::Policy => SolverKind::Policy,
            SolverChoice::Psor => SolverKind::Psor,
            SolverChoice::PenaltyMax => SolverKind::PenaltyMax,
            SolverChoice::PenaltyMin => SolverKind::PenaltyMin,
            SolverChoice::Hybrid => SolverKind::Hybrid,
        }
    }
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum, default_value_t = SolverChoice::Policy)]
    pub solver: SolverChoice,
    /// Interior space nodes.
    #[arg(long = "N", default_value_t = 200)]
    pub n_space: usize,
    /// Time steps.
    #[arg(long = "M", default_value_t = 200)]
    pub n_time: usize,
    /// Time-stepping weight: 1 fully implicit, 0.5 Crank–Nicolson.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver_opts: SolverArgs,
    /// Node values at t = 0 as CSV (S, value, payoff).
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
    /// Per-step iterations, exercise boundary and accounting as CSV.
    #[arg(long = "out-steps-csv")]
    pub out_steps_csv: Option<PathBuf>,
    /// Full run as JSON.
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LcpSolverChoice {
    Policy,
    Psor,
    #[value(alias = "penalty")]
    PenaltyMax,
    PenaltyMin,
    Hybrid,
    Oracle,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// LCP instance file.
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = LcpSolverChoice::Policy)]
    pub solver: LcpSolverChoice,
    /// Starting vector: `file` (the file's start line, the default when
    /// present), `c` (the obstacle, otherwise the default), `zero`, `w`
    /// (the unconstrained solution of `A x = b`), a comma-separated list,
    /// or a path to a file holding the vector.
    #[arg(long)]
    pub x0: Option<String>,
    /// Penalty parameter for the penalty and hybrid solvers.
    #[arg(long, default_value_t = 1e6)]
    pub rho: f64,
    #[command(flatten)]
    pub solver_opts: SolverArgs,
    /// Solution vector as a single whitespace-separated line.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solution and solve report as JSON.
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Figure1,
    Tables,
    Sigma,
    PsorRate,
    PenaltyLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    FixedK,
    FixedKOverH,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub scenario: Scenario,
    /// Space nodes: a list `100,200` or a range `start:stop:step`.
    #[arg(long = "N")]
    pub n_values: Option<String>,
    /// Time steps: a list or a range.
    #[arg(long = "M")]
    pub m_values: Option<String>,
    /// Volatilities for the sigma scenario (list).
    #[arg(long = "sigmas")]
    pub sigmas: Option<String>,
    /// Penalty parameters for the penalty-limit scenario (list).
    #[arg(long)]
    pub rhos: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    /// Solvers (comma-separated) for the tables and sigma scenarios.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub solver: Vec<SolverChoice>,
    #[arg(long, value_enum, default_value_t = ModeChoice::FixedKOverH)]
    pub mode: ModeChoice,
    /// Timing repeats per cell (median reported).
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver_opts: SolverArgs,
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long = "min-n", default_value_t = 2)]
    pub min_n: usize,
    #[arg(long = "max-n", default_value_t = 12)]
    pub max_n: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

/// An error carrying the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(flag: &str, msg: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INVALID,
            message: format!("invalid {flag}: {msg}"),
        }
    }
}

impl From<LcpError> for Failure {
    fn from(e: LcpError) -> Self {
        let code = if not_converged(&e).is_some() {
            EXIT_NOT_CONVERGED
        } else {
            EXIT_INVALID
        };
        let mut message = e.to_string();
        if let Some(d) = not_converged(&e).and_then(diagnose) {
            message.push_str(&format!("\ndiagnosis: {d}"));
        }
        Self { code, message }
    }
}

fn not_converged(e: &LcpError) -> Option<&NonConvergence> {
    match e {
        LcpError::NotConverged(nc) => Some(nc),
        LcpError::Step { source, .. } => not_converged(source),
        _ => None,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

fn diagnose(nc: &NonConvergence) -> Option<String> {
    if !nc.is_period_two_cycle() {
        return None;
    }
    let (a, b) = nc.last_two()?;
    let round = |v: &[f64]| {
        v.iter()
            .map(|x| (x * 1e9).round() / 1e9)
            .collect::<Vec<_>>()
    };
    Some(format!(
        "period-2 cycle between {} and {}",
        fmt_vec(&round(a)),
        fmt_vec(&round(b))
    ))
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_INVALID
                }
            };
        }
    };
    let result = match cli.command {
        Command::Price(a) => cmd_price(&a, out),
        Command::SolveLcp(a) => cmd_solve_lcp(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn validate_solver_args(s: &SolverArgs) -> std::result::Result<(), Failure> {
    if !(s.tol > 0.0 && s.tol.is_finite()) {
        return Err(Failure::invalid(
            "--tol",
            format!("{} (must be positive)", s.tol),
        ));
    }
    if s.max_iter == 0 {
        return Err(Failure::invalid("--max-iter", "0 (must be >= 1)"));
    }
    if !(s.omega > 0.0 && s.omega < 2.0) {
        return Err(Failure::invalid(
            "--omega",
            format!("{} (must lie in (0, 2))", s.omega),
        ));
    }
    if !(s.rho_prime > 0.0 && s.rho_prime.is_finite()) {
        return Err(Failure::invalid(
            "--rho-prime",
            format!("{} (must be positive)", s.rho_prime),
        ));
    }
    Ok(())
}

fn validate_model(m: &ModelArgs) -> std::result::Result<ModelParams, Failure> {
    let checks: [(&str, f64, bool); 5] = [
        ("--r", m.r, m.r.is_finite()),
        ("--sigma", m.sigma, m.sigma >= 0.0 && m.sigma.is_finite()),
        (
            "--T",
            m.maturity,
            m.maturity > 0.0 && m.maturity.is_finite(),
        ),
        ("--K", m.strike, m.strike > 0.0 && m.strike.is_finite()),
        ("--Smax", m.s_max, m.s_max > 0.0 && m.s_max.is_finite()),
    ];
    for (flag, value, ok) in checks {
        if !ok {
            return Err(Failure::invalid(flag, value));
        }
    }
    let params = m.params();
    params
        .validate()
        .map_err(|e| Failure::invalid("model parameters", e))?;
    Ok(params)
}

fn write_out<F>(path: &Option<PathBuf>, f: F) -> std::result::Result<(), Failure>
where
    F: FnOnce(&Path) -> crate::Result<()>,
{
    if let Some(p) = path {
        f(p).map_err(|e| Failure {
            code: EXIT_INVALID,
            message: format!("writing {}: {e}", p.display()),
        })?;
    }
    Ok(())
}

fn cmd_price(a: &PriceArgs, out: &mut dyn Write) -> CmdResult {
    if a.n_space == 0 {
        return Err(Failure::invalid("--N", "0 (N must be >= 1)"));
    }
    if a.n_time == 0 {
        return Err(Failure::invalid("--M", "0 (M must be >= 1)"));
    }
    if !(0.0..=1.0).contains(&a.theta) {
        return Err(Failure::invalid(
            "--theta",
            format!("{} (must lie in [0, 1])", a.theta),
        ));
    }
    validate_solver_args(&a.solver_opts)?;
    let params = validate_model(&a.model)?;
    let grid =
        GridSpec::new(a.n_space, a.n_time, a.theta).map_err(|e| Failure::invalid("grid", e))?;
    let cfg = a.solver_opts.config();
    let run = price_american(&params, &grid, a.solver.into(), &cfg)?;
    let (predicted, observed) = iteration_accounting_check(&run);

    let _ = writeln!(out, "solver            {}", run.solver.name());
    let _ = writeln!(
        out,
        "grid              N={} M={} theta={}",
        grid.n_space, grid.n_time, grid.theta
    );
    let _ = writeln!(out, "value at S=K      {:.6}", run.value_at(params.strike));
    let _ = writeln!(
        out,
        "iterations        total {} / max {} / avg {:.4}",
        run.total_iterations,
        run.max_iterations(),
        run.avg_iterations()
    );
    let _ = writeln!(
        out,
        "boundary          q={} e_M={} moved in {} of {} steps",
        run.strike_index,
        run.final_boundary(),
        run.moved_steps(),
        run.per_step.len()
    );
    let _ = writeln!(
        out,
        "accounting        predicted {predicted} / observed {observed}"
    );
    let _ = writeln!(
        out,
        "runtime           {:.3} ms",
        run.runtime.as_secs_f64() * 1e3
    );
    if !run.solver.is_exact() {
        let missed = run.per_step.iter().filter(|s| !s.lcp_satisfied).count();
        let _ = writeln!(out, "penalised steps missing the LCP tolerance: {missed}");
    }

    write_out(&a.out_csv, |p| {
        let payoff = put_payoff(&params, &grid);
        let mut w = csv::Writer::from_path(p).map_err(csv_io)?;
        w.write_record(["S", "value", "payoff"]).map_err(csv_io)?;
        for ((s, v), c) in run.grid_values.iter().zip(&run.value_t0).zip(&payoff) {
            w.write_record([s.to_string(), v.to_string(), c.to_string()])
                .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_out(&a.out_steps_csv, |p| {
        let mut w = csv::Writer::from_path(p).map_err(csv_io)?;
        w.write_record([
            "step",
            "iterations",
            "boundary_index",
            "boundary_moved",
            "lcp_satisfied",
        ])
        .map_err(csv_io)?;
        for (i, s) in run.per_step.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                s.iterations.to_string(),
                s.boundary_index.to_string(),
                s.boundary_moved.to_string(),
                s.lcp_satisfied.to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_out(&a.out_json, |p| {
        let doc = serde_json::json!({
            "run": run,
            "accounting": { "predicted": predicted, "observed": observed },
        });
        io::write_json(p, &doc)
    })?;
    Ok(EXIT_OK)
}

fn csv_io(e: csv::Error) -> LcpError {
    LcpError::InvalidConfig(format!("csv: {e}"))
}

fn resolve_x0(
    spec: Option<&str>,
    file_x0: Option<&Vec<f64>>,
    p: &LcpProblem,
) -> std::result::Result<Vec<f64>, Failure> {
    let n = p.n();
    let x0 = match spec {
        None => file_x0.cloned().unwrap_or_else(|| p.obstacle().to_vec()),
        Some("file") => file_x0
            .cloned()
            .ok_or_else(|| Failure::invalid("--x0", "the LCP file has no start line"))?,
        Some("c") => p.obstacle().to_vec(),
        Some("zero") => vec![0.0; n],
        Some("w") => match p.matrix() {
            Matrix::Tridiag(t) => thomas_solve(t, p.rhs()),
            Matrix::Dense(d) => d.solve(p.rhs()),
        }
        .map_err(|e| Failure::invalid("--x0 w", e))?,
        Some(s) if Path::new(s).is_file() => {
            let text = std::fs::read_to_string(s).map_err(|e| Failure::invalid("--x0", e))?;
            let body: String = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .collect::<Vec<_>>()
                .join(" ");
            io::parse_vector_list(&body).map_err(|e| Failure::invalid("--x0", e))?
        }
        Some(s) => io::parse_vector_list(s).map_err(|e| Failure::invalid("--x0", e))?,
    };
    if x0.len() != n {
        return Err(Failure::invalid(
            "--x0",
            format!("expected {n} values, found {}", x0.len()),
        ));
    }
    Ok(x0)
}

fn cmd_solve_lcp(a: &SolveArgs, out: &mut dyn Write) -> CmdResult {
    validate_solver_args(&a.solver_opts)?;
    if !(a.rho > 0.0 && a.rho.is_finite()) {
        return Err(Failure::invalid(
            "--rho",
            format!("{} (must be positive)", a.rho),
        ));
    }
    let file = io::read_lcp(&a.file)
        .map_err(|e| Failure::invalid(&format!("LCP file {}", a.file.display()), e))?;
    let p = &file.problem;
    let cfg = a.solver_opts.config();
    let x0 = resolve_x0(a.x0.as_deref(), file.x0.as_ref(), p)?;
    let solver_name = a
        .solver
        .to_possible_value()
        .map_or_else(String::new, |v| v.get_name().to_owned());

    let outcome: crate::Result<SolveReport> = match a.solver {
        LcpSolverChoice::Policy => policy_solve(p, &x0, &cfg),
        LcpSolverChoice::Psor => psor_solve(p, &x0, &cfg),
        LcpSolverChoice::PenaltyMax => penalty_newton_solve(
            p,
            &x0,
            &cfg,
            &PenaltyConfig::new(a.rho, PenaltyVariant::MaxPenalty)?,
        ),
        LcpSolverChoice::PenaltyMin => penalty_newton_solve(
            p,
            &x0,
            &cfg,
            &PenaltyConfig::new(a.rho, PenaltyVariant::MinPenalty)?,
        ),
        LcpSolverChoice::Hybrid => hybrid_solve(
            p,
            &x0,
            &cfg,
            &PenaltyConfig::new(a.rho, PenaltyVariant::MaxPenalty)?,
        ),
        LcpSolverChoice::Oracle => {
            let x = brute_force_oracle(p)?;
            let output = SolveOutput {
                solver: solver_name,
                converged: true,
                lcp_satisfied: crate::lcp::is_solved(p, &x, cfg.tol),
                iterations: 0,
                residual_norm: crate::lcp::min_residual(p, &x)?
                    .iter()
                    .fold(0.0, |m, v| m.max(v.abs())),
                solution: x,
                diagnosis: None,
                report: None,
            };
            return finish_solve(a, out, output, EXIT_OK);
        }
    };
    match outcome {
        Ok(report) => {
            let output = SolveOutput {
                solver: solver_name,
                converged: report.converged,
                lcp_satisfied: report.lcp_satisfied,
                iterations: report.iterations,
                residual_norm: report.residual_norm,
                solution: report.solution.clone(),
                diagnosis: None,
                report: Some(report),
            };
            finish_solve(a, out, output, EXIT_OK)
        }
        Err(LcpError::NotConverged(nc)) => {
            let diagnosis = diagnose(&nc);
            let _ = writeln!(out, "not converged after {} iterations", nc.iterations);
            let output = SolveOutput {
                solver: solver_name,
                converged: false,
                lcp_satisfied: nc.report.lcp_satisfied,
                iterations: nc.iterations,
                residual_norm: nc.report.residual_norm,
                solution: nc.report.solution.clone(),
                diagnosis,
                report: Some(nc.report),
            };
            finish_solve(a, out, output, EXIT_NOT_CONVERGED)
        }
        Err(e) => Err(e.into()),
    }
}

fn finish_solve(a: &SolveArgs, out: &mut dyn Write, output: SolveOutput, code: i32) -> CmdResult {
    if let Some(d) = &output.diagnosis {
        let _ = writeln!(out, "diagnosis: {d}");
    }
    let _ = writeln!(out, "solver      {}", output.solver);
    let _ = writeln!(out, "converged   {}", output.converged);
    let _ = writeln!(out, "iterations  {}", output.iterations);
    let _ = writeln!(out, "residual    {:.3e}", output.residual_norm);
    let _ = writeln!(out, "solution    {}", fmt_vec(&output.solution));
    write_out(&a.out, |p| {
        let line: Vec<String> = output.solution.iter().map(|x| format!("{x:?}")).collect();
        std::fs::write(p, line.join(" ") + "\n")?;
        Ok(())
    })?;
    write_out(&a.out_json, |p| io::write_json(p, &output))?;
    Ok(code)
}

/// Parses `a,b,c` or `start:stop:step` (inclusive).
fn parse_usize_list(flag: &str, s: &str) -> std::result::Result<Vec<usize>, Failure> {
    let bad = |m: &str| Failure::invalid(flag, format!("'{s}': {m}"));
    let values: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| bad("expected start:stop:step"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        match nums.as_slice() {
            [start, stop, step] if *step > 0 && start <= stop => {
                (*start..=*stop).step_by(*step).collect()
            }
            [start, stop] if start <= stop => (*start..=*stop).collect(),
            _ => return Err(bad("expected start:stop:step with step > 0")),
        }
    } else {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| bad("expected a comma-separated list"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad("empty list"));
    }
    if values.contains(&0) {
        return Err(Failure::invalid(
            flag,
            format!("'{s}': values must be >= 1"),
        ));
    }
    Ok(values)
}

fn parse_f64_list(flag: &str, s: &str) -> std::result::Result<Vec<f64>, Failure> {
    let v = io::parse_vector_list(s).map_err(|e| Failure::invalid(flag, e))?;
    if v.is_empty() {
        return Err(Failure::invalid(flag, "empty list"));
    }
    Ok(v)
}

fn single(flag: &str, values: &[usize]) -> std::result::Result<usize, Failure> {
    match values {
        [v] => Ok(*v),
        _ => Err(Failure::invalid(
            flag,
            "expected a single value for this scenario",
        )),
    }
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    validate_solver_args(&a.solver_opts)?;
    let params = validate_model(&a.model)?;
    let bench = BenchConfig {
        solver: a.solver_opts.config(),
        timing_repeats: a.repeats.max(1),
    };
    let list = |flag: &str, v: &Option<String>, default: &str| {
        parse_usize_list(flag, v.as_deref().unwrap_or(default))
    };
    let solvers = |default: &[SolverKind]| -> Vec<SolverKind> {
        if a.solver.is_empty() {
            default.to_vec()
        } else {
            a.solver.iter().map(|&s| s.into()).collect()
        }
    };
    let report: ScenarioReport = match a.scenario {
        Scenario::Figure1 => {
            bench::figure1_scan(&params, &list("--N", &a.n_values, "100:800:100")?, &bench)?
        }
        Scenario::Tables => {
            let ms = list("--M", &a.m_values, "100,200,400,800")?;
            let ns = list("--N", &a.n_values, "100,200,400,800")?;
            let parts = solvers(&[SolverKind::Policy])
                .into_iter()
                .map(|s| bench::table_scan(&params, &ms, &ns, a.theta, s, &bench))
                .collect::<crate::Result<Vec<_>>>()?;
            ScenarioReport::merge("tables", parts)
        }
        Scenario::Sigma => {
            let sigmas = parse_f64_list("--sigmas", a.sigmas.as_deref().unwrap_or("0.2,0.4,0.8"))?;
            let m = single("--M", &list("--M", &a.m_values, "1")?)?;
            let n = single("--N", &list("--N", &a.n_values, "200")?)?;
            let kinds = solvers(&[SolverKind::Policy, SolverKind::PenaltyMax, SolverKind::Psor]);
            bench::sigma_scan(&params, &sigmas, m, n, &kinds, &bench)?
        }
        Scenario::PsorRate => {
            let mode = match a.mode {
                ModeChoice::FixedK => KMode::FixedK,
                ModeChoice::FixedKOverH => KMode::FixedKOverH,
            };
            bench::psor_rate_probe(
                &params,
                &list("--N", &a.n_values, "50,100,200,400,800")?,
                mode,
                &bench,
            )?
        }
        Scenario::PenaltyLimit => {
            let rhos = parse_f64_list("--rhos", a.rhos.as_deref().unwrap_or("1e2,1e3,1e4,1e5"))?;
            if rhos.iter().any(|r| !(*r > 0.0)) {
                return Err(Failure::invalid("--rhos", "values must be positive"));
            }
            let m = single("--M", &list("--M", &a.m_values, "200")?)?;
            let n = single("--N", &list("--N", &a.n_values, "200")?)?;
            bench::penalty_limit_probe(&params, &rhos, m, n, &bench)?
        }
    };
    let _ = write!(out, "{}", report.summary());
    write_out(&a.out_csv, |p| report.write_csv(p))?;
    write_out(&a.out_json, |p| report.write_json(p))?;
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> CmdResult {
    if a.min_n == 0 || a.min_n > a.max_n {
        return Err(Failure::invalid(
            "--min-n",
            format!("{} (need 1 <= min-n <= max-n)", a.min_n),
        ));
    }
    if a.max_n > crate::solvers::ORACLE_MAX_N {
        return Err(Failure::invalid(
            "--max-n",
            format!(
                "{} (enumeration limit is {})",
                a.max_n,
                crate::solvers::ORACLE_MAX_N
            ),
        ));
    }
    if !(a.tol > 0.0) {
        return Err(Failure::invalid("--tol", a.tol));
    }
    let cfg = SolverConfig::default().with_tol(a.tol);
    let report = bench::oracle_cross_check(a.seed, a.cases, (a.min_n, a.max_n), &cfg)?;
    let _ = write!(out, "{}", report.summary());
    write_out(&a.out_csv, |p| report.write_csv(p))?;
    write_out(&a.out_json, |p| report.write_json(p))?;
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("lcp-pricer").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn zero_space_nodes_is_rejected() {
        let (code, _, err) = run_args(&["price", "--N", "0"]);
        assert_eq!(code, EXIT_INVALID);
        assert!(
            err.contains("--N") && err.contains("N must be >= 1"),
            "{err}"
        );
    }

    #[test]
    fn unknown_flags_exit_one() {
        assert_eq!(run_args(&["price", "--bogus"]).0, EXIT_INVALID);
        assert_eq!(run_args(&["bench", "nope"]).0, EXIT_INVALID);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(
            parse_usize_list("--N", "100:400:100").unwrap(),
            vec![100, 200, 300, 400]
        );
        assert_eq!(parse_usize_list("--N", "5,7").unwrap(), vec![5, 7]);
        assert!(parse_usize_list("--N", "0,7").is_err());
        assert!(parse_usize_list("--N", "4:1:1").is_err());
    }

    #[test]
    fn small_price_run() {
        let (code, out, _) = run_args(&["price", "--N", "50", "--M", "10"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("accounting"));
    }
}
