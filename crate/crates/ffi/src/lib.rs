//! C ABI over the cohort simulator.
//!
//! Parameters and simulations are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns a
//! [`CohortStatus`]; the message of the most recent failure on the calling
//! thread is available from [`cohort_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cohort::control::expected_abs_deviation;
use cohort::metrics::{compute_metrics, MetricsConfig, Trajectory};
use cohort::{Error, ErrorCategory, SimParams, Simulation};

/// Status codes. Nonzero values match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohortStatus {
    Ok = 0,
    NullPointer = 1,
    Usage = 2,
    Config = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

impl From<&Error> for CohortStatus {
    fn from(e: &Error) -> Self {
        match e.category() {
            ErrorCategory::Usage => CohortStatus::Usage,
            ErrorCategory::Config => CohortStatus::Config,
            ErrorCategory::Io => CohortStatus::Io,
            ErrorCategory::Numerical => CohortStatus::Numerical,
        }
    }
}

/// Number of metrics written by [`cohort_sim_metrics`]: P, RCA, D, C, K, F.
pub const COHORT_METRIC_COUNT: usize = 6;

/// Opaque parameter set.
pub struct CohortParams {
    inner: SimParams,
}

/// Opaque running simulation with its recorded trajectory.
pub struct CohortSim {
    sim: Simulation,
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn fail(status: CohortStatus, message: impl Into<String>) -> CohortStatus {
    set_error(message.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), CohortStatus>) -> CohortStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CohortStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(CohortStatus::Panic, "internal panic"),
    }
}

fn check(r: cohort::Result<()>) -> Result<(), CohortStatus> {
    r.map_err(|e| fail((&e).into(), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CohortStatus> {
    if p.is_null() {
        return Err(fail(CohortStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CohortStatus::Usage, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, CohortStatus> {
    p.as_ref()
        .ok_or_else(|| fail(CohortStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn mut_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, CohortStatus> {
    p.as_mut()
        .ok_or_else(|| fail(CohortStatus::NullPointer, format!("`{name}` is null")))
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cohort_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Default parameters. Never null.
#[no_mangle]
pub extern "C" fn cohort_params_default() -> *mut CohortParams {
    Box::into_raw(Box::new(CohortParams {
        inner: SimParams::default(),
    }))
}

/// Parses key-value config text on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cohort_params_parse(text: *const c_char, out: *mut *mut CohortParams) -> CohortStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let inner = cohort::parse_config(text).map_err(|e| fail((&e).into(), e.to_string()))?;
        *out = Box::into_raw(Box::new(CohortParams { inner }));
        Ok(())
    })
}

/// Sets one key, e.g. `("psi", "pi/2")`.
///
/// # Safety
/// `params` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn cohort_params_set(
    params: *mut CohortParams,
    key: *const c_char,
    value: *const c_char,
) -> CohortStatus {
    guard(|| {
        let params = mut_arg(params, "params")?;
        let (key, value) = (str_arg(key, "key")?, str_arg(value, "value")?);
        check(params.inner.set(key, value))
    })
}

/// # Safety
/// `params` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cohort_params_free(params: *mut CohortParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Validates `params` and builds the initial world.
///
/// # Safety
/// `params` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_new(params: *const CohortParams, out: *mut *mut CohortSim) -> CohortStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let params = &ref_arg(params, "params")?.inner;
        check(params.validate())?;
        let sim = Simulation::new(params).map_err(|e| fail((&e).into(), e.to_string()))?;
        let mut traj = Trajectory::new(params.n_agents);
        traj.seed = params.seed;
        traj.params = Some(params.clone());
        *out = Box::into_raw(Box::new(CohortSim { sim, traj }));
        Ok(())
    })
}

/// Advances `steps` synchronous steps.
///
/// # Safety
/// `sim` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_step(sim: *mut CohortSim, steps: usize) -> CohortStatus {
    guard(|| {
        let s = mut_arg(sim, "sim")?;
        for _ in 0..steps {
            let (poses, actions) = s.sim.step().map_err(|e| fail((&e).into(), e.to_string()))?;
            s.traj.push(poses, actions);
        }
        Ok(())
    })
}

/// Number of agents, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_agent_count(sim: *const CohortSim) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.params().n_agents)
}

/// Steps taken so far, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_current_step(sim: *const CohortSim) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.world().step)
}

/// Writes current poses as `x, y, theta` triples; `len` counts doubles and
/// must be at least three times the agent count.
///
/// # Safety
/// `sim` must come from this library; `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_poses(sim: *const CohortSim, out: *mut f64, len: usize) -> CohortStatus {
    guard(|| {
        let s = ref_arg(sim, "sim")?;
        if out.is_null() {
            return Err(fail(CohortStatus::NullPointer, "`out` is null"));
        }
        let poses = &s.sim.world().poses;
        if len < 3 * poses.len() {
            return Err(fail(
                CohortStatus::Usage,
                format!("buffer holds {len} values, need {}", 3 * poses.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(out, 3 * poses.len());
        for (chunk, p) in out.chunks_exact_mut(3).zip(poses) {
            chunk.copy_from_slice(&[p.x, p.y, p.theta]);
        }
        Ok(())
    })
}

/// Metrics of the steps recorded so far, written as P, RCA, D, C, K, F into
/// `out[0..COHORT_METRIC_COUNT]`.
///
/// # Safety
/// `sim` must come from this library; `out` must be valid for
/// [`COHORT_METRIC_COUNT`] doubles.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_metrics(sim: *const CohortSim, out: *mut f64) -> CohortStatus {
    guard(|| {
        let s = ref_arg(sim, "sim")?;
        if out.is_null() {
            return Err(fail(CohortStatus::NullPointer, "`out` is null"));
        }
        if s.traj.is_empty() {
            return Err(fail(CohortStatus::Usage, "no steps recorded"));
        }
        let report = compute_metrics(&s.traj, &MetricsConfig::from(s.sim.params()));
        std::slice::from_raw_parts_mut(out, COHORT_METRIC_COUNT).copy_from_slice(&report.values());
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cohort_sim_free(sim: *mut CohortSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// `E|X - d0|` for `X ~ N(mu_d, sigma_d^2)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cohort_expected_abs_deviation(
    mu_d: f64,
    sigma_d: f64,
    d0: f64,
    out: *mut f64,
) -> CohortStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = expected_abs_deviation(mu_d, sigma_d, d0).map_err(|e| fail((&e).into(), e.to_string()))?;
        Ok(())
    })
}
