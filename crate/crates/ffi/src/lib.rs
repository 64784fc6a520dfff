//! C interface to the `homoclinic` crate.
//!
//! Problems and solve results are opaque handles owned by the caller and
//! released with `hc_problem_free` / `hc_solution_free`. Every fallible
//! function returns an [`HcStatus`]; on failure `hc_last_error` describes the
//! cause for the calling thread. Strings returned through out-parameters are
//! heap-allocated and must be released with `hc_string_free`.
//!
//! Orbit data is node-major: for node `n = -M..=M` the `2N` values
//! `x1_1..x1_N, x2_1..x2_N`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use homoclinic::config::ProblemConfig;
use homoclinic::functional::{phi, FunctionalContext};
use homoclinic::lattice::BlockVector;
use homoclinic::nonlinearity::{check_hypotheses, SamplingPlan};
use homoclinic::solver::{multi_start, SolveResult};
use homoclinic::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Configuration = 3,
    Dimension = 4,
    Domain = 5,
    HypothesisViolation = 6,
    SpectralGap = 7,
    Numerical = 8,
    /// The hypothesis check reported a failure.
    CheckFailed = 9,
    /// The solve found no verified orbit.
    NoOrbit = 10,
    IndexOutOfRange = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// A parsed problem configuration with its solve context.
pub struct HcProblem {
    config: ProblemConfig,
    ctx: FunctionalContext,
}

/// Distinct verified orbits, sorted by the action value.
pub struct HcSolution {
    orbits: Vec<SolveResult>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut msg = msg.into();
    msg.retain(|c| c != '\0');
    let c = CString::new(msg).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> HcStatus {
    match e {
        Error::Dimension(_) => HcStatus::Dimension,
        Error::Domain(_) => HcStatus::Domain,
        Error::Configuration(_) => HcStatus::Configuration,
        Error::HypothesisViolation { .. } => HcStatus::HypothesisViolation,
        Error::SpectralGap { .. } => HcStatus::SpectralGap,
        Error::Numerical(_) => HcStatus::Numerical,
    }
}

struct Failure(HcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HcStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HcStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(HcStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(HcStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(p)
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', ""))
        .expect("nul bytes removed")
        .into_raw()
}

fn orbit_at(s: &HcSolution, index: usize) -> Result<&SolveResult, Failure> {
    s.orbits.get(index).ok_or_else(|| {
        Failure(
            HcStatus::IndexOutOfRange,
            format!("orbit index {index} out of range (have {})", s.orbits.len()),
        )
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned through an out-parameter of this
/// library that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn hc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON problem configuration and builds its solve context.
///
/// # Safety
/// `json` must be NULL or a NUL-terminated string; `out` must be NULL or
/// point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn hc_problem_from_json(
    json: *const c_char,
    out: *mut *mut HcProblem,
) -> HcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(Failure(HcStatus::NullPointer, "json is null".into()));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(HcStatus::InvalidUtf8, format!("config is not UTF-8: {e}")))?;
        let config = ProblemConfig::from_json(text)?;
        let ctx = config.solve_context()?;
        *out = Box::into_raw(Box::new(HcProblem { config, ctx }));
        Ok(())
    })
}

/// Releases a problem. NULL is ignored.
///
/// # Safety
/// `p` must be NULL or a handle from `hc_problem_from_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_problem_free(p: *mut HcProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Block dimension `N`, window half width `M` and number of doubles in an
/// orbit buffer, `(2M + 1) * 2N`. Any out-pointer may be NULL.
///
/// # Safety
/// `p` must be a live problem handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_problem_dims(
    p: *const HcProblem,
    block_dim: *mut usize,
    half_width: *mut usize,
    orbit_len: *mut usize,
) -> HcStatus {
    guard(|| {
        let p = non_null(p, "problem")?;
        let w = p.ctx.window();
        let n = p.ctx.block_dim();
        if !block_dim.is_null() {
            *block_dim = n;
        }
        if !half_width.is_null() {
            *half_width = w.half_width();
        }
        if !orbit_len.is_null() {
            *orbit_len = w.len() * 2 * n;
        }
        Ok(())
    })
}

/// Coercivity bounds `λ₀` and `Λ₀` of the coefficients.
///
/// # Safety
/// `p` must be a live problem handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_problem_bounds(
    p: *const HcProblem,
    lambda0: *mut f64,
    big_lambda0: *mut f64,
) -> HcStatus {
    guard(|| {
        let p = non_null(p, "problem")?;
        let (lambda0, big_lambda0) = (
            out_ptr(lambda0, "lambda0")?,
            out_ptr(big_lambda0, "big_lambda0")?,
        );
        let (lo, hi) = p.config.coefficients()?.require_r0()?;
        *lambda0 = lo;
        *big_lambda0 = hi;
        Ok(())
    })
}

/// Runs the hypothesis checker. Writes the JSON report to `report_json`
/// (may be NULL) and returns `CHECK_FAILED` when any hypothesis fails.
///
/// # Safety
/// `p` must be a live problem handle; `report_json` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn hc_problem_check(
    p: *const HcProblem,
    report_json: *mut *mut c_char,
) -> HcStatus {
    guard(|| {
        let p = non_null(p, "problem")?;
        if !report_json.is_null() {
            *report_json = ptr::null_mut();
        }
        let coeffs = p.config.coefficients()?;
        let nl = p.config.nonlinearity()?;
        let report = check_hypotheses(
            nl.as_ref(),
            &coeffs,
            &SamplingPlan::with_seed(p.config.solver.seed),
        );
        if !report_json.is_null() {
            *report_json = to_c_string(serde_json::to_string(&report).expect("report serializes"));
        }
        let failed = report.failed();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(Failure(
                HcStatus::CheckFailed,
                format!("hypotheses failed: {}", failed.join(", ")),
            ))
        }
    })
}

/// Evaluates the action functional at `x` (`len` doubles, node-major).
///
/// # Safety
/// `p` must be a live problem handle; `x` must point to `len` readable
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_problem_phi(
    p: *const HcProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> HcStatus {
    guard(|| {
        let p = non_null(p, "problem")?;
        let out = out_ptr(out, "out")?;
        let x = non_null(x, "x")?;
        let data = std::slice::from_raw_parts(x, len).to_vec();
        let v = BlockVector::from_vec(p.ctx.window(), p.ctx.block_dim(), data)?;
        *out = phi(&p.ctx, &v)?;
        Ok(())
    })
}

/// Multi-start solve with the configured solver options. On success `out`
/// holds a handle with at least one orbit; `NO_ORBIT` leaves it NULL.
///
/// # Safety
/// `p` must be a live problem handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_solve(p: *const HcProblem, out: *mut *mut HcSolution) -> HcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let p = non_null(p, "problem")?;
        let opts = p.config.solver.options()?;
        let orbits = multi_start(&p.ctx, &opts)?;
        if orbits.is_empty() {
            return Err(Failure(
                HcStatus::NoOrbit,
                "no verified nontrivial orbit found".into(),
            ));
        }
        *out = Box::into_raw(Box::new(HcSolution { orbits }));
        Ok(())
    })
}

/// Releases a solve result. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a handle from `hc_solve` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_solution_free(s: *mut HcSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of orbits in `s`; 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn hc_solution_count(s: *const HcSolution) -> usize {
    s.as_ref().map_or(0, |s| s.orbits.len())
}

/// Action value and `l∞` norm of orbit `index`. Either out-pointer may be NULL.
///
/// # Safety
/// `s` must be a live solution handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_solution_orbit_info(
    s: *const HcSolution,
    index: usize,
    phi_value: *mut f64,
    linf_norm: *mut f64,
) -> HcStatus {
    guard(|| {
        let r = orbit_at(non_null(s, "solution")?, index)?;
        if !phi_value.is_null() {
            *phi_value = r.phi_value;
        }
        if !linf_norm.is_null() {
            *linf_norm = r.orbit.linf_norm();
        }
        Ok(())
    })
}

/// Copies orbit `index` into `buf` (capacity `cap` doubles). `len` receives
/// the required length even when the buffer is too small.
///
/// # Safety
/// `s` must be a live solution handle; `buf` must be NULL or point to `cap`
/// writable doubles; `len` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn hc_solution_orbit(
    s: *const HcSolution,
    index: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> HcStatus {
    guard(|| {
        let data = orbit_at(non_null(s, "solution")?, index)?.orbit.as_slice();
        if !len.is_null() {
            *len = data.len();
        }
        if buf.is_null() || cap < data.len() {
            return Err(Failure(
                HcStatus::BufferTooSmall,
                format!("orbit needs {} doubles, buffer holds {cap}", data.len()),
            ));
        }
        std::ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// JSON verification report of orbit `index`.
///
/// # Safety
/// `s` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_solution_report_json(
    s: *const HcSolution,
    index: usize,
    out: *mut *mut c_char,
) -> HcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let r = orbit_at(non_null(s, "solution")?, index)?;
        let value = serde_json::json!({
            "start": r.start_used,
            "phi": r.phi_value,
            "grad_inf_norm": r.grad_inf_norm,
            "iterations": r.iterations,
            "verification": r.verification,
        });
        *out = to_c_string(value.to_string());
        Ok(())
    })
}
