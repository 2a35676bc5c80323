//! C ABI over the gridshield simulator.
//!
//! Fallible functions return a [`GsStatus`] and write results through out
//! pointers. On failure the message is available from [`gs_last_error`] on
//! the same thread. Strings handed out by this library are owned by the
//! caller and must be released with [`gs_string_free`]; runs with
//! [`gs_run_free`]. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gridshield::codec::decode_goose;
use gridshield::ids::Host;
use gridshield::netsim::EventLog;
use gridshield::scenarios::{load_builtin, load_file, run_scenario, score, ScenarioId, ScenarioRun};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Unknown scenario, bad override or unreadable scenario file.
    Config = 3,
    /// The simulation itself failed.
    Simulation = 4,
    Decode = 5,
    /// Event log could not be parsed or scored.
    Replay = 6,
    /// The requested value does not exist for this run.
    NoValue = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsCulprit {
    None = 0,
    StationBusSwitch = 1,
    Pied = 2,
}

/// Finished scenario run. Opaque to C.
pub struct GsRun {
    run: ScenarioRun,
}

struct Failure(GsStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(format!("panic: {}", msg.unwrap_or_default()));
            GsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(GsStatus::NullArgument, format!("{what} is null"))
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(GsStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// # Safety
/// `list` is null with `n == 0`, or points to `n` valid strings.
unsafe fn overrides_arg(list: *const *const c_char, n: usize) -> Result<Vec<String>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if list.is_null() {
        return Err(null("overrides"));
    }
    std::slice::from_raw_parts(list, n).iter().map(|&p| str_arg(p, "override").map(str::to_owned)).collect()
}

/// # Safety
/// `run` is null or a live handle from this library.
unsafe fn run_arg<'a>(run: *const GsRun) -> Result<&'a ScenarioRun, Failure> {
    run.as_ref().map(|r| &r.run).ok_or_else(|| null("run"))
}

/// # Safety
/// `out` is null or writable.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

fn to_c(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure(GsStatus::Decode, e.to_string()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<*mut c_char, Failure> {
    to_c(serde_json::to_string(v).map_err(|e| Failure(GsStatus::Decode, e.to_string()))?)
}

fn finish(
    spec: Result<gridshield::scenarios::ScenarioSpec, impl ToString>,
    out: *mut *mut GsRun,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let spec = spec.map_err(|e| Failure(GsStatus::Config, e.to_string()))?;
    let run = run_scenario(&spec).map_err(|e| Failure(GsStatus::Simulation, e.to_string()))?;
    // SAFETY: checked non-null above.
    unsafe { put(out, Box::into_raw(Box::new(GsRun { run }))) }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn gs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Runs a built-in scenario ("baseline", "attack1", "attack2") with
/// optional `key=value` overrides.
///
/// # Safety
/// `name` is a valid string; `overrides` holds `n_overrides` valid strings
/// (or is null when the count is 0); `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_builtin(
    name: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut GsRun,
) -> GsStatus {
    guard(|| {
        let id: ScenarioId = str_arg(name, "name")?
            .parse()
            .map_err(|e: gridshield::scenarios::ConfigError| Failure(GsStatus::Config, e.to_string()))?;
        let overrides = overrides_arg(overrides, n_overrides)?;
        finish(load_builtin(id, &overrides), out)
    })
}

/// Runs the scenario described by a TOML file.
///
/// # Safety
/// As [`gs_run_builtin`], with `path` in place of `name`.
#[no_mangle]
pub unsafe extern "C" fn gs_run_config(
    path: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut GsRun,
) -> GsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let overrides = overrides_arg(overrides, n_overrides)?;
        finish(load_file(Path::new(path), &overrides), out)
    })
}

/// # Safety
/// `run` is null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_run_free(run: *mut GsRun) {
    if !run.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(run))));
    }
}

/// # Safety
/// `run` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_passed(run: *const GsRun, out: *mut bool) -> GsStatus {
    guard(|| put(out, run_arg(run)?.result.passed))
}

/// `GS_CULPRIT_NONE` when the IDS reached no verdict.
///
/// # Safety
/// `run` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_culprit(run: *const GsRun, out: *mut GsCulprit) -> GsStatus {
    guard(|| {
        let c = match run_arg(run)?.result.verdict.as_ref().map(|v| v.culprit) {
            None => GsCulprit::None,
            Some(Host::StationBusSwitch) => GsCulprit::StationBusSwitch,
            Some(Host::Pied) => GsCulprit::Pied,
        };
        put(out, c)
    })
}

/// # Safety
/// `run` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_alert_count(run: *const GsRun, out: *mut u64) -> GsStatus {
    guard(|| put(out, run_arg(run)?.result.alerts as u64))
}

/// Fault-to-trip latency in microseconds. `GS_STATUS_NO_VALUE` when the
/// breaker never tripped.
///
/// # Safety
/// `run` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_delay_total_us(run: *const GsRun, out: *mut u64) -> GsStatus {
    guard(|| {
        let d = run_arg(run)?
            .result
            .delay
            .as_ref()
            .ok_or_else(|| Failure(GsStatus::NoValue, "no trip in this run".into()))?;
        put(out, d.total_us)
    })
}

/// Scored result as JSON. Free with [`gs_string_free`].
///
/// # Safety
/// `run` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_result_json(run: *const GsRun, out: *mut *mut c_char) -> GsStatus {
    guard(|| {
        let s = json(&run_arg(run)?.result)?;
        put(out, s)
    })
}

/// Full event log as JSON lines. Free with [`gs_string_free`].
///
/// # Safety
/// `run` is a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_run_events_jsonl(run: *const GsRun, out: *mut *mut c_char) -> GsStatus {
    guard(|| {
        let s = to_c(run_arg(run)?.log.to_jsonl())?;
        put(out, s)
    })
}

/// Decodes one GOOSE frame into JSON. Free with [`gs_string_free`].
///
/// # Safety
/// `bytes` points to `len` readable bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_goose_decode(bytes: *const u8, len: usize, out: *mut *mut c_char) -> GsStatus {
    guard(|| {
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        let frame = decode_goose(std::slice::from_raw_parts(bytes, len))
            .map_err(|e| Failure(GsStatus::Decode, e.to_string()))?;
        let s = json(&frame)?;
        put(out, s)
    })
}

/// Re-scores an event log given as JSON lines and returns the result JSON.
///
/// # Safety
/// `jsonl` is a valid string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_replay_jsonl(jsonl: *const c_char, out: *mut *mut c_char) -> GsStatus {
    guard(|| {
        let text = str_arg(jsonl, "jsonl")?;
        let replay = |e: String| Failure(GsStatus::Replay, e);
        let log = EventLog::read_jsonl(text.as_bytes()).map_err(|e| replay(e.to_string()))?;
        let result = score(&log).map_err(|e| replay(e.to_string()))?;
        let s = json(&result)?;
        put(out, s)
    })
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
