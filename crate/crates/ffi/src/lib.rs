//! C ABI for the `lcp-pricer` solvers.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! producing functions and released with the matching `*_free`. Every
//! function returns an [`LcpStatus`] (or a plain value for infallible
//! accessors); on failure a description is available from
//! [`lcp_last_error_message`] on the same thread. Panics never unwind into
//! the caller: they are reported as [`LcpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use lcp_pricer::{
    brute_force_oracle, greedy_policy, hybrid_solve, is_solved, min_residual, penalty_newton_solve,
    policy_solve, price_american, psor_solve, DenseMatrix, GridSpec, LcpError, LcpProblem,
    ModelParams, PenaltyConfig, PenaltyVariant, PricingRun, SolveReport, SolverConfig, SolverKind,
    TridiagSystem,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 2,
    /// The iteration stopped without solving the LCP. A report holding the
    /// last iterate is still returned where the call produces one.
    NotConverged = 3,
    /// A linear solve met a (numerically) zero pivot or singular matrix.
    Singular = 4,
    /// The output buffer is shorter than the data to copy.
    BufferTooSmall = 5,
    /// An internal panic was caught.
    Panic = 6,
}

/// Solution method for [`lcp_solve`] and [`lcp_price_american`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcpMethod {
    Policy = 0,
    Psor = 1,
    PenaltyMax = 2,
    PenaltyMin = 3,
    Hybrid = 4,
    /// Exhaustive enumeration; standalone solves with n <= 16 only.
    Oracle = 5,
}

/// Solver settings. Obtain defaults from [`lcp_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcpSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// PSOR relaxation parameter in (0, 2).
    pub omega: f64,
    /// Penalty parameter for standalone solves.
    pub rho: f64,
    /// Scaled penalty parameter for pricing (`rho = rho_prime / k`).
    pub rho_prime: f64,
}

/// Model parameters of the American put. Obtain defaults from
/// [`lcp_model_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcpModelParams {
    pub r: f64,
    pub sigma: f64,
    pub maturity: f64,
    pub strike: f64,
    pub s_max: f64,
}

/// Opaque LCP instance.
pub struct LcpProblemHandle(LcpProblem);

/// Opaque result of a standalone solve.
pub struct LcpReportHandle(SolveReport);

/// Opaque result of a pricing run.
pub struct LcpRunHandle(PricingRun);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(LcpStatus, String);

impl From<LcpError> for Failure {
    fn from(e: LcpError) -> Self {
        let status = match &e {
            LcpError::NotConverged(_) => LcpStatus::NotConverged,
            LcpError::Step { source, .. } if matches!(**source, LcpError::NotConverged(_)) => {
                LcpStatus::NotConverged
            }
            LcpError::ZeroPivot { .. } | LcpError::Singular | LcpError::IllConditioned { .. } => {
                LcpStatus::Singular
            }
            _ => LcpStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(LcpStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LcpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            LcpStatus::Panic
        }
    }
}

/// Like [`guard`] for accessors returning a plain value; `fallback` is
/// returned on a null handle or a panic.
fn guard_value<T>(fallback: T, f: impl FnOnce() -> Option<T>) -> T {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Some(v)) => v,
        Ok(None) => {
            set_last_error("null handle");
            fallback
        }
        Err(_) => {
            set_last_error("internal panic");
            fallback
        }
    }
}

/// # Safety
/// `p` must be null or point to `len` readable `f64` values.
unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure(LcpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(
            LcpStatus::NullPointer,
            "output pointer is null".into(),
        ))
    } else {
        Ok(())
    }
}

/// # Safety
/// `buf` must be null or point to `len` writable `f64` values.
unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure(LcpStatus::NullPointer, "buffer is null".into()));
    }
    if len < src.len() {
        return Err(Failure(
            LcpStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn config(opts: Option<&LcpSolveOptions>) -> Result<SolverConfig, Failure> {
    let o = opts.copied().unwrap_or_else(|| lcp_solve_options_default());
    let cfg = SolverConfig {
        tol: o.tol,
        max_iter: o.max_iter,
        omega: o.omega,
        rho_prime: o.rho_prime,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated
/// and always NUL-terminated when `len > 0`). Returns the full message
/// length excluding the terminator, or 0 if there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lcp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn lcp_solve_options_default() -> LcpSolveOptions {
    let d = SolverConfig::default();
    LcpSolveOptions {
        tol: d.tol,
        max_iter: d.max_iter,
        omega: d.omega,
        rho: 1e6,
        rho_prime: d.rho_prime,
    }
}

#[no_mangle]
pub extern "C" fn lcp_model_params_default() -> LcpModelParams {
    let d = ModelParams::default();
    LcpModelParams {
        r: d.r,
        sigma: d.sigma,
        maturity: d.maturity,
        strike: d.strike,
        s_max: d.s_max,
    }
}

/// Creates a tridiagonal LCP. `lower[0]` and `upper[n-1]` are padding and
/// must be 0. All arrays hold `n` values.
///
/// # Safety
/// Array arguments must point to `n` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lcp_problem_new_tridiag(
    n: usize,
    lower: *const f64,
    diag: *const f64,
    upper: *const f64,
    b: *const f64,
    c: *const f64,
    out: *mut *mut LcpProblemHandle,
) -> LcpStatus {
    guard(|| {
        check_out(out)?;
        if n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        let a = TridiagSystem::new(
            read_slice(lower, n, "lower")?.to_vec(),
            read_slice(diag, n, "diag")?.to_vec(),
            read_slice(upper, n, "upper")?.to_vec(),
        )?;
        let p = LcpProblem::new(
            a,
            read_slice(b, n, "b")?.to_vec(),
            read_slice(c, n, "c")?.to_vec(),
        )?;
        *out = Box::into_raw(Box::new(LcpProblemHandle(p)));
        Ok(())
    })
}

/// Creates a dense LCP from a row-major `n * n` matrix (`n <= 16`).
///
/// # Safety
/// `a` must point to `n * n` values, `b` and `c` to `n` values; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn lcp_problem_new_dense(
    n: usize,
    a: *const f64,
    b: *const f64,
    c: *const f64,
    out: *mut *mut LcpProblemHandle,
) -> LcpStatus {
    guard(|| {
        check_out(out)?;
        if n == 0 {
            return Err(invalid("n must be >= 1"));
        }
        let entries = read_slice(
            a,
            n.checked_mul(n).ok_or_else(|| invalid("n too large"))?,
            "a",
        )?;
        let rows = entries.chunks(n).map(<[f64]>::to_vec).collect();
        let p = LcpProblem::new(
            DenseMatrix::from_rows(rows)?,
            read_slice(b, n, "b")?.to_vec(),
            read_slice(c, n, "c")?.to_vec(),
        )?;
        *out = Box::into_raw(Box::new(LcpProblemHandle(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from `lcp_problem_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lcp_problem_free(p: *mut LcpProblemHandle) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of unknowns, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_problem_size(p: *const LcpProblemHandle) -> usize {
    guard_value(0, || p.as_ref().map(|h| h.0.n()))
}

fn solve_with(
    p: &LcpProblem,
    method: LcpMethod,
    x0: &[f64],
    cfg: &SolverConfig,
    rho: f64,
) -> lcp_pricer::Result<SolveReport> {
    let pen = |variant| PenaltyConfig::new(rho, variant);
    match method {
        LcpMethod::Policy => policy_solve(p, x0, cfg),
        LcpMethod::Psor => psor_solve(p, x0, cfg),
        LcpMethod::PenaltyMax => {
            penalty_newton_solve(p, x0, cfg, &pen(PenaltyVariant::MaxPenalty)?)
        }
        LcpMethod::PenaltyMin => {
            penalty_newton_solve(p, x0, cfg, &pen(PenaltyVariant::MinPenalty)?)
        }
        LcpMethod::Hybrid => hybrid_solve(p, x0, cfg, &pen(PenaltyVariant::MaxPenalty)?),
        LcpMethod::Oracle => {
            let x = brute_force_oracle(p)?;
            let solved = is_solved(p, &x, cfg.tol);
            Ok(SolveReport {
                residual_norm: min_residual(p, &x)?.iter().fold(0.0, |m, v| m.max(v.abs())),
                policy: greedy_policy(p, &x, cfg.tie_break)?,
                solution: x,
                iterations: 0,
                converged: solved,
                lcp_satisfied: solved,
                trace: Vec::new(),
                phases: None,
            })
        }
    }
}

/// Solves `problem` from `x0` (`n` values, or null to start from the
/// obstacle). `options` may be null for defaults. On `NotConverged` the
/// report of the last iterate is still stored in `out`.
///
/// # Safety
/// `problem` must be a live handle, `x0` null or `n` readable values,
/// `options` null or valid, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lcp_solve(
    problem: *const LcpProblemHandle,
    method: LcpMethod,
    x0: *const f64,
    options: *const LcpSolveOptions,
    out: *mut *mut LcpReportHandle,
) -> LcpStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let p = &problem
            .as_ref()
            .ok_or_else(|| Failure(LcpStatus::NullPointer, "problem is null".into()))?
            .0;
        let cfg = config(options.as_ref())?;
        let rho = options
            .as_ref()
            .map_or(lcp_solve_options_default().rho, |o| o.rho);
        let x0 = if x0.is_null() {
            p.obstacle().to_vec()
        } else {
            read_slice(x0, p.n(), "x0")?.to_vec()
        };
        match solve_with(p, method, &x0, &cfg, rho) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(LcpReportHandle(report)));
                Ok(())
            }
            Err(LcpError::NotConverged(nc)) => {
                let msg = format!("not converged after {} iterations", nc.iterations);
                *out = Box::into_raw(Box::new(LcpReportHandle(nc.report)));
                Err(Failure(LcpStatus::NotConverged, msg))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_free(r: *mut LcpReportHandle) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_size(r: *const LcpReportHandle) -> usize {
    guard_value(0, || r.as_ref().map(|h| h.0.solution.len()))
}

/// Linear solves (or PSOR sweeps) performed.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_iterations(r: *const LcpReportHandle) -> usize {
    guard_value(0, || r.as_ref().map(|h| h.0.iterations))
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_converged(r: *const LcpReportHandle) -> bool {
    guard_value(false, || r.as_ref().map(|h| h.0.converged))
}

/// Whether the solution passes the normalised LCP test.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_lcp_satisfied(r: *const LcpReportHandle) -> bool {
    guard_value(false, || r.as_ref().map(|h| h.0.lcp_satisfied))
}

/// `||min{A x - b, x - c}||_inf`, or NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_residual_norm(r: *const LcpReportHandle) -> f64 {
    guard_value(f64::NAN, || r.as_ref().map(|h| h.0.residual_norm))
}

/// Copies the solution into `buf` (at least `lcp_report_size` values).
///
/// # Safety
/// `r` must be a live report handle and `buf` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn lcp_report_solution(
    r: *const LcpReportHandle,
    buf: *mut f64,
    len: usize,
) -> LcpStatus {
    guard(|| {
        let h = r
            .as_ref()
            .ok_or_else(|| Failure(LcpStatus::NullPointer, "report is null".into()))?;
        copy_out(&h.0.solution, buf, len)
    })
}

/// Prices the American put on an `n_space x n_time` grid with the
/// theta-scheme. `params` and `options` may be null for defaults. The
/// oracle method is not available here.
///
/// # Safety
/// Pointer arguments must be null or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lcp_price_american(
    params: *const LcpModelParams,
    n_space: usize,
    n_time: usize,
    theta: f64,
    method: LcpMethod,
    options: *const LcpSolveOptions,
    out: *mut *mut LcpRunHandle,
) -> LcpStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let m = params
            .as_ref()
            .copied()
            .unwrap_or_else(|| lcp_model_params_default());
        let model = ModelParams {
            r: m.r,
            sigma: m.sigma,
            maturity: m.maturity,
            strike: m.strike,
            s_max: m.s_max,
            ..ModelParams::default()
        };
        let kind = match method {
            LcpMethod::Policy => SolverKind::Policy,
            LcpMethod::Psor => SolverKind::Psor,
            LcpMethod::PenaltyMax => SolverKind::PenaltyMax,
            LcpMethod::PenaltyMin => SolverKind::PenaltyMin,
            LcpMethod::Hybrid => SolverKind::Hybrid,
            LcpMethod::Oracle => return Err(invalid("the oracle cannot price")),
        };
        let grid = GridSpec::new(n_space, n_time, theta)?;
        let run = price_american(&model, &grid, kind, &config(options.as_ref())?)?;
        *out = Box::into_raw(Box::new(LcpRunHandle(run)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_free(r: *mut LcpRunHandle) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Number of interior nodes.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_size(r: *const LcpRunHandle) -> usize {
    guard_value(0, || r.as_ref().map(|h| h.0.value_t0.len()))
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_total_iterations(r: *const LcpRunHandle) -> usize {
    guard_value(0, || r.as_ref().map(|h| h.0.total_iterations))
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_max_iterations(r: *const LcpRunHandle) -> usize {
    guard_value(0, || r.as_ref().map(|h| h.0.max_iterations()))
}

/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_avg_iterations(r: *const LcpRunHandle) -> f64 {
    guard_value(f64::NAN, || r.as_ref().map(|h| h.0.avg_iterations()))
}

/// Option value at asset price `s`, interpolated linearly between nodes.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_value_at(r: *const LcpRunHandle, s: f64) -> f64 {
    guard_value(f64::NAN, || r.as_ref().map(|h| h.0.value_at(s)))
}

/// Copies the `t = 0` values on the interior nodes into `buf`.
///
/// # Safety
/// `r` must be a live run handle and `buf` point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn lcp_run_values(
    r: *const LcpRunHandle,
    buf: *mut f64,
    len: usize,
) -> LcpStatus {
    guard(|| {
        let h = r
            .as_ref()
            .ok_or_else(|| Failure(LcpStatus::NullPointer, "run is null".into()))?;
        copy_out(&h.0.value_t0, buf, len)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, LcpStatus::Panic);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { lcp_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert!(n > 0);
        let msg = unsafe { std::ffi::CStr::from_ptr(buf.as_ptr()) }
            .to_str()
            .unwrap();
        assert!(msg.contains("boom"), "{msg}");
    }

    #[test]
    fn error_mapping() {
        assert_eq!(Failure::from(LcpError::Singular).0, LcpStatus::Singular);
        assert_eq!(
            Failure::from(LcpError::InvalidConfig("x".into())).0,
            LcpStatus::InvalidArgument
        );
    }
}
