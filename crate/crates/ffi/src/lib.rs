//! C ABI over `recourse_qaoa`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns an
//! [`RqStatus`]; on failure [`rq_last_error`] describes what went wrong on
//! the calling thread. Strings returned through `char **` are freed with
//! [`rq_string_free`]. Panics never unwind into C; they surface as
//! [`RqStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};
use recourse_qaoa::cli::{load_instance, parse_instance};
use recourse_qaoa::model::InstanceSpec;
use recourse_qaoa::oracle::{benchmark_report, Oracle};
use recourse_qaoa::qaoa::{optimize, EvalMode, InitStrategy, OptimizerKind, QaoaConfig, RunResult};
use recourse_qaoa::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInstance = 4,
    InvalidConfig = 5,
    Io = 6,
    Solver = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqOptimizer {
    NelderMead = 0,
    Spsa = 1,
    CobylaStyle = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RqInit {
    AnnealingRamp = 0,
    Random = 1,
    Constant = 2,
}

/// A validated problem instance.
pub struct RqInstance(InstanceSpec);

/// QAOA run options; starts from the library defaults.
pub struct RqQaoaConfig(QaoaConfig);

/// Outcome of one optimization run.
pub struct RqRunResult(RunResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> RqStatus {
    match e {
        Error::Parse { .. } => RqStatus::Parse,
        Error::Invalid(_) => RqStatus::InvalidInstance,
        Error::Config(_) | Error::NonPositivePenalty(_) | Error::ParamLength { .. } => {
            RqStatus::InvalidConfig
        }
        Error::Io(_) => RqStatus::Io,
        _ => RqStatus::Solver,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (RqStatus, String)>) -> RqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RqStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RqStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RqStatus, String) {
    (RqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RqStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RqStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_slice<'a>(
    p: *const i64,
    len: size_t,
    what: &str,
) -> Result<&'a [i64], (RqStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (RqStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (RqStatus, String)> {
    let c = CString::new(s).map_err(|_| (RqStatus::Solver, "output contains a NUL byte".into()))?;
    write_out(out, c.into_raw())
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an instance from the text of an instance file.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_instance_from_str(
    text: *const c_char,
    out: *mut *mut RqInstance,
) -> RqStatus {
    guard(|| {
        let inst = parse_instance(as_str(text, "text")?).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(RqInstance(inst))))
    })
}

/// Loads and validates an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_instance_from_file(
    path: *const c_char,
    out: *mut *mut RqInstance,
) -> RqStatus {
    guard(|| {
        let inst = load_instance(as_str(path, "path")?.as_ref()).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(RqInstance(inst))))
    })
}

/// # Safety
/// `instance` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rq_instance_free(instance: *mut RqInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of timesteps.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_instance_horizon(
    instance: *const RqInstance,
    out: *mut size_t,
) -> RqStatus {
    guard(|| write_out(out, as_ref(instance, "instance")?.0.horizon))
}

/// Expected total cost of the first-stage plan `j[0..len]`.
///
/// # Safety
/// `instance` must be a live handle, `j` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_expected_cost(
    instance: *const RqInstance,
    j: *const i64,
    len: size_t,
    out: *mut f64,
) -> RqStatus {
    guard(|| {
        let inst = &as_ref(instance, "instance")?.0;
        let j = as_slice(j, len, "j")?;
        if j.len() != inst.horizon {
            return Err((
                RqStatus::InvalidConfig,
                format!("plan has {} entries, horizon is {}", j.len(), inst.horizon),
            ));
        }
        let oracle = Oracle::new(inst).map_err(lib_err)?;
        write_out(out, oracle.expected_cost(j))
    })
}

/// Exact benchmark report as a JSON object.
///
/// # Safety
/// `instance` must be a live handle; `out_json` must be writable. Free the
/// result with [`rq_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rq_solve_exact_json(
    instance: *const RqInstance,
    out_json: *mut *mut c_char,
) -> RqStatus {
    guard(|| {
        let report = benchmark_report(&as_ref(instance, "instance")?.0).map_err(lib_err)?;
        let json = serde_json::to_string(&report).map_err(|e| lib_err(e.into()))?;
        write_string(out_json, json)
    })
}

/// A configuration holding the library defaults.
#[no_mangle]
pub extern "C" fn rq_config_new() -> *mut RqQaoaConfig {
    Box::into_raw(Box::new(RqQaoaConfig(QaoaConfig::default())))
}

/// # Safety
/// `config` must come from [`rq_config_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rq_config_free(config: *mut RqQaoaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn edit(config: *mut RqQaoaConfig, f: impl FnOnce(&mut QaoaConfig)) -> RqStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        f(&mut cfg.0);
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_layers(
    config: *mut RqQaoaConfig,
    layers: size_t,
) -> RqStatus {
    edit(config, |c| c.layers = layers)
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_seed(config: *mut RqQaoaConfig, seed: u64) -> RqStatus {
    edit(config, |c| c.seed = seed)
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_max_evaluations(
    config: *mut RqQaoaConfig,
    budget: size_t,
) -> RqStatus {
    edit(config, |c| c.max_evaluations = budget)
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_penalty(
    config: *mut RqQaoaConfig,
    penalty: f64,
) -> RqStatus {
    edit(config, |c| c.penalty = penalty)
}

/// `shots == 0` selects exact expectations, anything else shot sampling.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_shots(config: *mut RqQaoaConfig, shots: u64) -> RqStatus {
    edit(config, |c| {
        c.eval_mode = if shots == 0 {
            EvalMode::Exact
        } else {
            EvalMode::Sampled { shots }
        }
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_optimizer(
    config: *mut RqQaoaConfig,
    optimizer: RqOptimizer,
) -> RqStatus {
    edit(config, |c| {
        c.optimizer = match optimizer {
            RqOptimizer::NelderMead => OptimizerKind::NelderMead,
            RqOptimizer::Spsa => OptimizerKind::Spsa,
            RqOptimizer::CobylaStyle => OptimizerKind::CobylaStyle,
        }
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rq_config_set_init(config: *mut RqQaoaConfig, init: RqInit) -> RqStatus {
    edit(config, |c| {
        c.init = match init {
            RqInit::AnnealingRamp => InitStrategy::AnnealingRamp,
            RqInit::Random => InitStrategy::Random,
            RqInit::Constant => InitStrategy::Constant,
        }
    })
}

/// Runs one optimization. A NULL `config` means defaults.
///
/// # Safety
/// `instance` must be a live handle, `config` a live handle or NULL, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rq_qaoa_run(
    instance: *const RqInstance,
    config: *const RqQaoaConfig,
    out: *mut *mut RqRunResult,
) -> RqStatus {
    guard(|| {
        let inst = &as_ref(instance, "instance")?.0;
        let default = QaoaConfig::default();
        let cfg = config.as_ref().map_or(&default, |c| &c.0);
        let result = optimize(inst, cfg).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(RqRunResult(result))))
    })
}

/// # Safety
/// `result` must come from [`rq_qaoa_run`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rq_run_result_free(result: *mut RqRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_run_best_expectation(
    result: *const RqRunResult,
    out: *mut f64,
) -> RqStatus {
    guard(|| write_out(out, as_ref(result, "result")?.0.best_expectation))
}

/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_run_evaluations(
    result: *const RqRunResult,
    out: *mut size_t,
) -> RqStatus {
    guard(|| write_out(out, as_ref(result, "result")?.0.evaluations))
}

/// Copies the modal first-stage plan into `buf`. `len` receives the plan
/// length even when `cap` is too small.
///
/// # Safety
/// `result` must be a live handle, `buf` must have room for `cap` values
/// (or be NULL with `cap == 0`) and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_run_modal_j(
    result: *const RqRunResult,
    buf: *mut i64,
    cap: size_t,
    len: *mut size_t,
) -> RqStatus {
    guard(|| {
        let modal = &as_ref(result, "result")?.0.modal_j;
        write_out(len, modal.len())?;
        if cap < modal.len() {
            return Err((
                RqStatus::BufferTooSmall,
                format!("need room for {} values, got {cap}", modal.len()),
            ));
        }
        if !modal.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(modal.as_ptr(), buf, modal.len());
        }
        Ok(())
    })
}

/// Measured probability of the first-stage plan `j[0..len]`.
///
/// # Safety
/// `result` must be a live handle, `j` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rq_run_probability_of(
    result: *const RqRunResult,
    j: *const i64,
    len: size_t,
    out: *mut f64,
) -> RqStatus {
    guard(|| {
        let r = &as_ref(result, "result")?.0;
        write_out(out, r.probability_of(as_slice(j, len, "j")?))
    })
}

/// Full run result as JSON.
///
/// # Safety
/// `result` must be a live handle; `out_json` must be writable. Free the
/// result with [`rq_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rq_run_result_json(
    result: *const RqRunResult,
    out_json: *mut *mut c_char,
) -> RqStatus {
    guard(|| {
        let json =
            serde_json::to_string(&as_ref(result, "result")?.0).map_err(|e| lib_err(e.into()))?;
        write_string(out_json, json)
    })
}
