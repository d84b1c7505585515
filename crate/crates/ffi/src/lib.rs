//! C ABI over `ffode-core`.
//!
//! Conventions:
//! - every fallible call returns an [`FfodeStatus`]; outputs go through
//!   pointer arguments and are untouched on failure;
//! - handles are opaque and owned by the caller until passed to the matching
//!   `_free`; `_free(NULL)` is a no-op;
//! - complex arrays are split into `re`/`im` arrays of doubles, matrices are
//!   row-major, and a NULL `im` means all-zero imaginary parts;
//! - strings returned by the library are freed with [`ffode_string_free`];
//! - the message of the most recent error on the calling thread is available
//!   from [`ffode_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ffode_core::bench::{self, BenchConfig, LbParams};
use ffode_core::block_encoding as be;
use ffode_core::error::FfodeError;
use ffode_core::ff_eigen::{self, EigenOracleSet};
use ffode_core::ff_qsvt;
use ffode_core::matrix::{self, ComplexMatrix, ComplexVector, EigenSystem};
use ffode_core::ode_reference::{self as odr, Inhomogeneous, OdeProblem};
use ffode_core::report::SolveReport;
use num_complex::Complex64;

/// Status codes; 2–4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfodeStatus {
    Ok = 0,
    /// NULL pointer, bad UTF-8 or out-of-range argument at the boundary.
    InvalidArgument = 1,
    /// Configuration or parameter error.
    Config = 2,
    /// Input does not meet the solver's structural requirements.
    Mismatch = 3,
    /// Numerical failure or violated contract.
    Numeric = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfodeSolver {
    /// Hermitian negative-definite `A` through QSVT.
    Negdef = 0,
    /// `A = −H²` with a block-encoding of `H`; see [`ffode_problem_set_sqrt_factor`].
    Sqrt = 1,
    /// Normal `A` through its eigensystem.
    Eigen = 2,
    /// Classical reference solution only.
    Reference = 3,
}

/// Linear ODE `du/dt = A u + b` on `[0, T]`.
pub struct FfodeProblem {
    problem: OdeProblem,
    h: Option<ComplexMatrix>,
}

/// Result of one solve.
pub struct FfodeReport {
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let s = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &FfodeError) -> FfodeStatus {
    match e.exit_code() {
        2 => FfodeStatus::Config,
        3 => FfodeStatus::Mismatch,
        _ => FfodeStatus::Numeric,
    }
}

struct ArgError(String);

enum Failure {
    Arg(ArgError),
    Core(FfodeError),
}

impl From<ArgError> for Failure {
    fn from(e: ArgError) -> Self {
        Failure::Arg(e)
    }
}

impl From<FfodeError> for Failure {
    fn from(e: FfodeError) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FfodeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FfodeStatus::Ok,
        Ok(Err(Failure::Arg(ArgError(m)))) => {
            set_error(&m);
            FfodeStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let m = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(&format!("panic: {}", m.unwrap_or_default()));
            FfodeStatus::Panic
        }
    }
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), ArgError> {
    if p.is_null() {
        return Err(ArgError(format!("{name} is NULL")));
    }
    Ok(())
}

/// # Safety
/// `re` must hold `len` doubles; `im` is NULL or holds `len` doubles.
unsafe fn complex_slice(re: *const f64, im: *const f64, len: usize, name: &str) -> Result<Vec<Complex64>, ArgError> {
    nonnull(re, name)?;
    let re = std::slice::from_raw_parts(re, len);
    let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
    Ok((0..len).map(|i| Complex64::new(re[i], im.map_or(0.0, |v| v[i]))).collect())
}

unsafe fn matrix_arg(re: *const f64, im: *const f64, dim: usize, name: &str) -> Result<ComplexMatrix, ArgError> {
    let v = complex_slice(re, im, dim * dim, name)?;
    Ok(ComplexMatrix::from_row_slice(dim, dim, &v))
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, ArgError> {
    nonnull(s, name)?;
    CStr::from_ptr(s).to_str().map_err(|_| ArgError(format!("{name} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ffode_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ffode_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a problem. `b_re` may be NULL for the homogeneous case.
///
/// # Safety
/// Matrix arrays hold `dim*dim` doubles (row-major), vector arrays `dim`;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ffode_problem_new(
    dim: usize,
    a_re: *const f64,
    a_im: *const f64,
    u0_re: *const f64,
    u0_im: *const f64,
    b_re: *const f64,
    b_im: *const f64,
    horizon: f64,
    out: *mut *mut FfodeProblem,
) -> FfodeStatus {
    guard(|| {
        nonnull(out, "out")?;
        if dim == 0 {
            return Err(ArgError("dim must be positive".into()).into());
        }
        let a = matrix_arg(a_re, a_im, dim, "a_re")?;
        let u0 = ComplexVector::from_vec(complex_slice(u0_re, u0_im, dim, "u0_re")?);
        let problem = if b_re.is_null() {
            OdeProblem::homogeneous(a, u0, horizon)?
        } else {
            let b = ComplexVector::from_vec(complex_slice(b_re, b_im, dim, "b_re")?);
            OdeProblem::constant(a, u0, b, horizon)?
        };
        *out = Box::into_raw(Box::new(FfodeProblem { problem, h: None }));
        Ok(())
    })
}

/// Attaches Hermitian `H` with `A = −H²` for [`FfodeSolver::Sqrt`].
///
/// # Safety
/// `problem` is a live handle; arrays hold `dim*dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn ffode_problem_set_sqrt_factor(problem: *mut FfodeProblem, h_re: *const f64, h_im: *const f64) -> FfodeStatus {
    guard(|| {
        nonnull(problem, "problem")?;
        let p = &mut *problem;
        let h = matrix_arg(h_re, h_im, p.problem.dim(), "h_re")?;
        let a = p.problem.matrix();
        let defect = matrix::spectral_norm(&(&a + &h * &h));
        if defect > 1e-9 * (1.0 + matrix::spectral_norm(&a)) {
            return Err(FfodeError::Mismatch(format!("a is not -h^2 (defect {defect:.3e})")).into());
        }
        p.h = Some(h);
        Ok(())
    })
}

/// System dimension; 0 for NULL.
///
/// # Safety
/// `problem` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ffode_problem_dim(problem: *const FfodeProblem) -> usize {
    if problem.is_null() {
        return 0;
    }
    (*problem).problem.dim()
}

/// # Safety
/// `problem` is NULL or a handle from [`ffode_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ffode_problem_free(problem: *mut FfodeProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn solve(p: &FfodeProblem, solver: FfodeSolver, eps: f64) -> Result<SolveReport, Failure> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ArgError(format!("eps must lie in (0,1), got {eps}")).into());
    }
    let prob = &p.problem;
    Ok(match solver {
        FfodeSolver::Negdef => {
            let delta = bench::negdef_delta(&prob.matrix(), None)?;
            ff_qsvt::solve_negdef(prob, delta, eps)?
        }
        FfodeSolver::Sqrt => {
            let h = p.h.as_ref().ok_or_else(|| FfodeError::Mismatch("sqrt solver needs ffode_problem_set_sqrt_factor".into()))?;
            let u_h = be::dilation(h, matrix::spectral_norm(h).max(1e-300))?;
            ff_qsvt::solve_sqrt_access(prob, &u_h, eps)?
        }
        FfodeSolver::Eigen => {
            let o = EigenOracleSet::auto(EigenSystem::from_matrix(&prob.matrix())?);
            match prob.inhomogeneous {
                Inhomogeneous::None => ff_eigen::solve_eigen_homogeneous(prob, &o)?,
                _ => ff_eigen::solve_eigen_inhomogeneous(prob, &o)?,
            }
        }
        FfodeSolver::Reference => {
            let u = odr::solve_reference(prob)?;
            let n = u.norm();
            if !(n > 0.0) {
                return Err(FfodeError::ZeroVector.into());
            }
            SolveReport::from_amplitude("reference-only", &u.unscale(n), &u, Default::default(), eps, 0)?
        }
    })
}

impl FfodeSolver {
    fn from_code(code: u32) -> Option<Self> {
        [FfodeSolver::Negdef, FfodeSolver::Sqrt, FfodeSolver::Eigen, FfodeSolver::Reference].into_iter().find(|s| *s as u32 == code)
    }
}

/// Runs `solver` (an [`FfodeSolver`] value) on `problem` with target
/// precision `eps`. The code is taken as an integer so that out-of-range
/// values are rejected rather than undefined.
///
/// # Safety
/// `problem` is a live handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ffode_solve(problem: *const FfodeProblem, solver: u32, eps: f64, out: *mut *mut FfodeReport) -> FfodeStatus {
    guard(|| {
        nonnull(problem, "problem")?;
        nonnull(out, "out")?;
        let solver = FfodeSolver::from_code(solver).ok_or_else(|| ArgError(format!("unknown solver code {solver}")))?;
        let report = solve(&*problem, solver, eps)?;
        *out = Box::into_raw(Box::new(FfodeReport { report }));
        Ok(())
    })
}

/// Scalar fields of a report. Any output pointer may be NULL.
///
/// # Safety
/// `report` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn ffode_report_summary(
    report: *const FfodeReport,
    success_probability: *mut f64,
    error_vs_reference: *mut f64,
    repeats_no_aa: *mut u64,
    repeats_aa: *mut u64,
) -> FfodeStatus {
    guard(|| {
        nonnull(report, "report")?;
        let r = &(*report).report;
        if !success_probability.is_null() {
            *success_probability = r.success_probability;
        }
        if !error_vs_reference.is_null() {
            *error_vs_reference = r.error_vs_reference;
        }
        if !repeats_no_aa.is_null() {
            *repeats_no_aa = r.repeats_no_aa;
        }
        if !repeats_aa.is_null() {
            *repeats_aa = r.repeats_aa;
        }
        Ok(())
    })
}

/// Copies the normalized output state into `re`/`im` (`im` may be NULL).
///
/// # Safety
/// `report` is a live handle; `re` (and `im` if set) hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ffode_report_state(report: *const FfodeReport, re: *mut f64, im: *mut f64, len: usize) -> FfodeStatus {
    guard(|| {
        nonnull(report, "report")?;
        nonnull(re, "re")?;
        let s = &(*report).report.output_state;
        if len != s.len() {
            return Err(ArgError(format!("state has length {}, buffer {len}", s.len())).into());
        }
        for (i, z) in s.iter().enumerate() {
            *re.add(i) = z.re;
            if !im.is_null() {
                *im.add(i) = z.im;
            }
        }
        Ok(())
    })
}

/// Query count charged to the named oracle (e.g. `"U_A"`); 0 if never used.
///
/// # Safety
/// `report` is a live handle; `name` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ffode_report_queries(report: *const FfodeReport, name: *const c_char, out: *mut u64) -> FfodeStatus {
    guard(|| {
        nonnull(report, "report")?;
        nonnull(out, "out")?;
        let name = str_arg(name, "name")?;
        *out = (*report).report.ledger.get(name);
        Ok(())
    })
}

/// # Safety
/// `report` is NULL or a handle from [`ffode_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ffode_report_free(report: *mut FfodeReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Runs a JSON campaign config and returns the solve CSV.
///
/// # Safety
/// `config_json` is a NUL-terminated string; `out_csv` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ffode_campaign_csv(config_json: *const c_char, jobs: usize, include_timing: bool, out_csv: *mut *mut c_char) -> FfodeStatus {
    guard(|| {
        nonnull(out_csv, "out_csv")?;
        let cfg = BenchConfig::from_json(str_arg(config_json, "config_json")?)?;
        let rows = bench::run_campaign(&cfg, jobs.max(1))?;
        *out_csv = into_c_string(bench::solve_csv(&rows, include_timing)?);
        Ok(())
    })
}

/// Builds and certifies a witness family with default parameters and the
/// given seed. `all_hold` reports whether every certification passed.
///
/// # Safety
/// `family` is a NUL-terminated string; output pointers are valid.
#[no_mangle]
pub unsafe extern "C" fn ffode_lb_csv(family: *const c_char, seed: u64, all_hold: *mut bool, out_csv: *mut *mut c_char) -> FfodeStatus {
    guard(|| {
        nonnull(all_hold, "all_hold")?;
        nonnull(out_csv, "out_csv")?;
        let fam = str_arg(family, "family")?;
        let o = bench::run_lb(fam, &LbParams { seed: Some(seed), ..Default::default() })?;
        *all_hold = o.all_hold();
        *out_csv = into_c_string(bench::lb_csv(&[o])?);
        Ok(())
    })
}

/// # Safety
/// `s` is NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ffode_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
