//! Exercises the C ABI from Rust and, when a C compiler is available,
//! from a C program built against the generated header.

use std::ffi::{c_char, CStr};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lcp_pricer_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { lcp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn counterexample() -> *mut LcpProblemHandle {
    let a = [6.0, 8.0, 16.0, 8.0];
    let (b, c) = ([58.0, 64.0], [1.0, 5.0]);
    let mut p = ptr::null_mut();
    let status = unsafe { lcp_problem_new_dense(2, a.as_ptr(), b.as_ptr(), c.as_ptr(), &mut p) };
    assert_eq!(status, LcpStatus::Ok);
    p
}

#[test]
fn oracle_and_cycling_policy_on_dense_problem() {
    let p = counterexample();
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { lcp_solve(p, LcpMethod::Oracle, ptr::null(), ptr::null(), &mut r) },
        LcpStatus::Ok
    );
    let mut x = [0.0; 2];
    assert_eq!(
        unsafe { lcp_report_solution(r, x.as_mut_ptr(), 2) },
        LcpStatus::Ok
    );
    assert_eq!(x, [3.0, 5.0]);
    unsafe { lcp_report_free(r) };

    let start = [0.6, 6.8];
    let mut r = ptr::null_mut();
    let status = unsafe { lcp_solve(p, LcpMethod::Policy, start.as_ptr(), ptr::null(), &mut r) };
    assert_eq!(status, LcpStatus::NotConverged);
    assert!(last_error().contains("not converged"));
    assert!(!r.is_null(), "the last iterate is still reported");
    assert!(!unsafe { lcp_report_lcp_satisfied(r) });
    unsafe { lcp_report_free(r) };
    unsafe { lcp_problem_free(p) };
}

#[test]
fn every_method_solves_a_tridiagonal_problem() {
    let lower = [0.0, -1.0, -1.0];
    let diag = [3.0, 3.0, 3.0];
    let upper = [-1.0, -1.0, 0.0];
    let (b, c) = ([1.0, -2.0, 0.5], [0.0, 0.0, 0.0]);
    let mut p = ptr::null_mut();
    let status = unsafe {
        lcp_problem_new_tridiag(
            3,
            lower.as_ptr(),
            diag.as_ptr(),
            upper.as_ptr(),
            b.as_ptr(),
            c.as_ptr(),
            &mut p,
        )
    };
    assert_eq!(status, LcpStatus::Ok);
    let mut opts = lcp_solve_options_default();
    opts.rho = 1e10;
    opts.omega = 1.2;
    let mut reference = [0.0; 3];
    for method in [
        LcpMethod::Oracle,
        LcpMethod::Policy,
        LcpMethod::Psor,
        LcpMethod::PenaltyMax,
        LcpMethod::PenaltyMin,
        LcpMethod::Hybrid,
    ] {
        let mut r = ptr::null_mut();
        assert_eq!(
            unsafe { lcp_solve(p, method, ptr::null(), &opts, &mut r) },
            LcpStatus::Ok,
            "{method:?}"
        );
        let mut x = [0.0; 3];
        assert_eq!(
            unsafe { lcp_report_solution(r, x.as_mut_ptr(), 3) },
            LcpStatus::Ok
        );
        if method == LcpMethod::Oracle {
            reference = x;
        }
        let gap = x
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-7, "{method:?}: {gap}");
        assert!(unsafe { lcp_report_residual_norm(r) } < 1e-7);
        unsafe { lcp_report_free(r) };
    }
    unsafe { lcp_problem_free(p) };
}

#[test]
fn invalid_arguments_are_reported() {
    let mut p = ptr::null_mut();
    let v = [1.0];
    let status = unsafe {
        lcp_problem_new_tridiag(
            1,
            v.as_ptr(),
            v.as_ptr(),
            v.as_ptr(),
            v.as_ptr(),
            v.as_ptr(),
            &mut p,
        )
    };
    assert_eq!(status, LcpStatus::InvalidArgument, "nonzero padding");
    assert!(!last_error().is_empty());
    let status = unsafe {
        lcp_problem_new_tridiag(
            1,
            ptr::null(),
            v.as_ptr(),
            v.as_ptr(),
            v.as_ptr(),
            v.as_ptr(),
            &mut p,
        )
    };
    assert_eq!(status, LcpStatus::NullPointer);
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe {
            lcp_solve(
                ptr::null(),
                LcpMethod::Policy,
                ptr::null(),
                ptr::null(),
                &mut r,
            )
        },
        LcpStatus::NullPointer
    );

    let p = counterexample();
    let mut opts = lcp_solve_options_default();
    opts.omega = 2.5;
    assert_eq!(
        unsafe { lcp_solve(p, LcpMethod::Psor, ptr::null(), &opts, &mut r) },
        LcpStatus::InvalidArgument
    );
    assert!(last_error().contains("omega"));
    unsafe { lcp_problem_free(p) };

    assert_eq!(unsafe { lcp_report_iterations(ptr::null()) }, 0);
    assert!(unsafe { lcp_run_value_at(ptr::null(), 1.0) }.is_nan());
    unsafe { lcp_report_free(ptr::null_mut()) };
    unsafe { lcp_run_free(ptr::null_mut()) };
}

#[test]
fn pricing_run_accessors() {
    let params = lcp_model_params_default();
    let mut run = ptr::null_mut();
    let status = unsafe {
        lcp_price_american(
            &params,
            200,
            200,
            1.0,
            LcpMethod::Policy,
            ptr::null(),
            &mut run,
        )
    };
    assert_eq!(status, LcpStatus::Ok);
    assert_eq!(unsafe { lcp_run_size(run) }, 200);
    assert_eq!(unsafe { lcp_run_max_iterations(run) }, 3);
    assert!((unsafe { lcp_run_avg_iterations(run) } - 1.06).abs() < 1e-12);
    assert_eq!(unsafe { lcp_run_total_iterations(run) }, 212);
    let mut values = vec![0.0; 200];
    assert_eq!(
        unsafe { lcp_run_values(run, values.as_mut_ptr(), values.len()) },
        LcpStatus::Ok
    );
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    unsafe { lcp_run_free(run) };

    let mut run = ptr::null_mut();
    let status = unsafe {
        lcp_price_american(
            &params,
            0,
            10,
            1.0,
            LcpMethod::Policy,
            ptr::null(),
            &mut run,
        )
    };
    assert_eq!(status, LcpStatus::InvalidArgument);
    assert!(run.is_null());
    let status = unsafe {
        lcp_price_american(
            &params,
            10,
            10,
            1.0,
            LcpMethod::Oracle,
            ptr::null(),
            &mut run,
        )
    };
    assert_eq!(status, LcpStatus::InvalidArgument);
}

#[test]
fn header_declares_the_interface() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lcp_pricer.h"))
            .unwrap();
    for name in [
        "lcp_problem_new_tridiag",
        "lcp_problem_new_dense",
        "lcp_solve",
        "lcp_report_solution",
        "lcp_price_american",
        "lcp_last_error_message",
        "LCP_STATUS_NOT_CONVERGED",
        "typedef struct LcpProblemHandle LcpProblemHandle",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Directory holding the library artifacts of the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = artifact_dir().join("liblcp_pricer_ffi.a");
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&compiler).arg("--version").output().is_err() {
        eprintln!("no C compiler found; skipping the C smoke test");
        return;
    }
    assert!(
        lib.exists(),
        "static library not built at {}",
        lib.display()
    );
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = std::env::temp_dir().join(format!("lcp_pricer_smoke_{}", std::process::id()));
    let status = Command::new(&compiler)
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke test failed to compile");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
