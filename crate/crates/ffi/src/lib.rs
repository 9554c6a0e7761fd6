//! C ABI over the simulator.
//!
//! Every function returns an [`EosimStatus`]; results come back through out
//! pointers. On failure the message is available from
//! [`eosim_last_error`] on the same thread. Strings handed out by this
//! library must be released with [`eosim_string_free`], run handles with
//! [`eosim_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eosim::contracts::checker::check_vulnerabilities;
use eosim::contracts::descriptor;
use eosim::metrics;
use eosim::scenarios::{bundled, run_scenario, RunError, RunOutput, ScenarioSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EosimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// The scenario or descriptor text did not parse or validate.
    InvalidInput = 3,
    NotFound = 4,
    /// A runtime invariant failed during the simulation.
    Runtime = 5,
    /// The input distribution was empty.
    Empty = 6,
    Panic = 7,
}

/// A finished simulation run.
pub struct EosimRun {
    output: RunOutput,
    trace_jsonl: CString,
    summary_json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: EosimStatus, message: impl Into<String>) -> EosimStatus {
    set_error(message);
    status
}

/// Runs `f`, turning a panic into [`EosimStatus::Panic`].
fn guard(f: impl FnOnce() -> EosimStatus) -> EosimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EosimStatus::Panic, msg)
        }
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, EosimStatus> {
    if s.is_null() {
        return Err(fail(EosimStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(EosimStatus::InvalidUtf8, e.to_string()))
}

fn to_c(s: String) -> CString {
    CString::new(s.replace('\0', " ")).expect("NUL bytes removed")
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn eosim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eosim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn start_run(spec: Result<ScenarioSpec, EosimStatus>, out: *mut *mut EosimRun) -> EosimStatus {
    let spec = match spec {
        Ok(s) => s,
        Err(status) => return status,
    };
    match run_scenario(&spec) {
        Ok(output) => {
            let run = EosimRun {
                trace_jsonl: to_c(output.trace.to_jsonl()),
                summary_json: to_c(serde_json::to_string_pretty(&output.summary).expect("summary serializes")),
                output,
            };
            // SAFETY: the caller checked `out` for null.
            unsafe { *out = Box::into_raw(Box::new(run)) };
            EosimStatus::Ok
        }
        Err(RunError::Config(e)) => fail(EosimStatus::InvalidInput, e.to_string()),
        Err(e) => fail(EosimStatus::Runtime, e.to_string()),
    }
}

/// Runs the scenario given as TOML text.
///
/// # Safety
/// `toml` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn eosim_run_scenario(toml: *const c_char, out: *mut *mut EosimRun) -> EosimStatus {
    guard(|| {
        if out.is_null() {
            return fail(EosimStatus::NullPointer, "null out pointer");
        }
        let spec = read_str(toml).and_then(|t| ScenarioSpec::parse(t).map_err(|e| fail(EosimStatus::InvalidInput, e.to_string())));
        start_run(spec, out)
    })
}

/// Runs a scenario bundled with the library, by name.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn eosim_run_bundled(name: *const c_char, out: *mut *mut EosimRun) -> EosimStatus {
    guard(|| {
        if out.is_null() {
            return fail(EosimStatus::NullPointer, "null out pointer");
        }
        let spec = read_str(name).and_then(|n| {
            let text = bundled::text(n).ok_or_else(|| fail(EosimStatus::NotFound, format!("no bundled scenario {n:?}")))?;
            ScenarioSpec::parse(text).map_err(|e| fail(EosimStatus::InvalidInput, e.to_string()))
        });
        start_run(spec, out)
    })
}

/// Head block number of node 0 at the end of the run.
///
/// # Safety
/// `run` must be a live handle from [`eosim_run_scenario`] or
/// [`eosim_run_bundled`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eosim_run_head(run: *const EosimRun, out: *mut u64) -> EosimStatus {
    if run.is_null() || out.is_null() {
        return fail(EosimStatus::NullPointer, "null argument");
    }
    *out = (*run).output.node0.head_num();
    EosimStatus::Ok
}

/// Number of trace events recorded.
///
/// # Safety
/// As for [`eosim_run_head`].
#[no_mangle]
pub unsafe extern "C" fn eosim_run_event_count(run: *const EosimRun, out: *mut usize) -> EosimStatus {
    if run.is_null() || out.is_null() {
        return fail(EosimStatus::NullPointer, "null argument");
    }
    *out = (*run).output.trace.events.len();
    EosimStatus::Ok
}

/// Borrowed pointer to the trace in JSON-lines form, valid until the handle
/// is freed.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eosim_run_trace(run: *const EosimRun) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    (*run).trace_jsonl.as_ptr()
}

/// Borrowed pointer to the summary JSON, valid until the handle is freed.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn eosim_run_summary(run: *const EosimRun) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    (*run).summary_json.as_ptr()
}

/// Releases a run handle.
///
/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eosim_run_free(run: *mut EosimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Checks a contract descriptor. Writes the number of findings to
/// `out_count` and, when `out_json` is non-null, a newly allocated JSON
/// array of findings to free with [`eosim_string_free`].
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out_count` writable;
/// `out_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn eosim_lint(text: *const c_char, out_count: *mut usize, out_json: *mut *mut c_char) -> EosimStatus {
    guard(|| {
        if out_count.is_null() {
            return fail(EosimStatus::NullPointer, "null out pointer");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed = match descriptor::parse(text) {
            Ok(p) => p,
            Err(e) => return fail(EosimStatus::InvalidInput, e.to_string()),
        };
        let findings = check_vulnerabilities(&parsed.contract);
        *out_count = findings.len();
        if !out_json.is_null() {
            let json = serde_json::to_string(&findings).expect("findings serialize");
            *out_json = to_c(json).into_raw();
        }
        EosimStatus::Ok
    })
}

/// Shannon entropy in bits of the distribution given by `counts`.
///
/// # Safety
/// `counts` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eosim_entropy_bits(counts: *const u64, len: usize, out: *mut f64) -> EosimStatus {
    if out.is_null() || (counts.is_null() && len > 0) {
        return fail(EosimStatus::NullPointer, "null argument");
    }
    let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(counts, len) };
    match metrics::entropy_bits(slice) {
        Ok(v) => {
            *out = v;
            EosimStatus::Ok
        }
        Err(e) => fail(EosimStatus::Empty, e.to_string()),
    }
}

/// Gini coefficient of `values`.
///
/// # Safety
/// `values` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eosim_gini(values: *const f64, len: usize, out: *mut f64) -> EosimStatus {
    if out.is_null() || (values.is_null() && len > 0) {
        return fail(EosimStatus::NullPointer, "null argument");
    }
    let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(values, len) };
    match metrics::gini(slice) {
        Ok(v) => {
            *out = v;
            EosimStatus::Ok
        }
        Err(e) => fail(EosimStatus::Empty, e.to_string()),
    }
}
