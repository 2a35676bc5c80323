use std::ffi::{c_char, CStr, CString};
use std::ptr;

use gridshield_ffi::*;

fn last_error() -> String {
    let p = gs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { gs_string_free(s) };
    out
}

fn run(name: &str, overrides: &[&str]) -> Result<*mut GsRun, GsStatus> {
    let name = CString::new(name).unwrap();
    let owned: Vec<CString> = overrides.iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<*const c_char> = owned.iter().map(|s| s.as_ptr()).collect();
    let mut out = ptr::null_mut();
    match unsafe { gs_run_builtin(name.as_ptr(), ptrs.as_ptr(), ptrs.len(), &mut out) } {
        GsStatus::Ok => Ok(out),
        s => Err(s),
    }
}

#[test]
fn attack1_through_the_abi() {
    let r = run("attack1", &[]).unwrap();
    let mut passed = false;
    let mut culprit = GsCulprit::None;
    let mut alerts = 0u64;
    let mut delay = 0u64;
    unsafe {
        assert_eq!(gs_run_passed(r, &mut passed), GsStatus::Ok);
        assert_eq!(gs_run_culprit(r, &mut culprit), GsStatus::Ok);
        assert_eq!(gs_run_alert_count(r, &mut alerts), GsStatus::Ok);
        assert_eq!(gs_run_delay_total_us(r, &mut delay), GsStatus::Ok);
    }
    assert!(passed);
    assert_eq!(culprit, GsCulprit::StationBusSwitch);
    assert!(alerts > 0);
    assert!(delay > 0);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gs_run_result_json(r, &mut s) }, GsStatus::Ok);
    let result: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(result["verdict"]["culprit"], "station_bus_switch");

    // replaying the exported log gives the same result
    assert_eq!(unsafe { gs_run_events_jsonl(r, &mut s) }, GsStatus::Ok);
    let jsonl = CString::new(take(s)).unwrap();
    assert_eq!(unsafe { gs_replay_jsonl(jsonl.as_ptr(), &mut s) }, GsStatus::Ok);
    let replayed: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(replayed, result);
    unsafe { gs_run_free(r) };
}

#[test]
fn baseline_delay_and_overrides() {
    let r = run("baseline", &["with_ids=true"]).unwrap();
    let mut delay = 0;
    assert_eq!(unsafe { gs_run_delay_total_us(r, &mut delay) }, GsStatus::Ok);
    assert_eq!(delay, 27_000);
    unsafe { gs_run_free(r) };

    let r = run("attack2", &[]).unwrap();
    assert_eq!(unsafe { gs_run_delay_total_us(r, &mut delay) }, GsStatus::NoValue);
    unsafe { gs_run_free(r) };
}

#[test]
fn error_codes() {
    assert_eq!(run("attack9", &[]).unwrap_err(), GsStatus::Config);
    assert!(last_error().contains("attack9"));
    assert_eq!(run("baseline", &["t_sv=1"]).unwrap_err(), GsStatus::Config);

    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(gs_run_builtin(ptr::null(), ptr::null(), 0, &mut out), GsStatus::NullArgument);
        let name = CString::new("baseline").unwrap();
        assert_eq!(gs_run_builtin(name.as_ptr(), ptr::null(), 1, &mut out), GsStatus::NullArgument);
        assert_eq!(gs_run_builtin(name.as_ptr(), ptr::null(), 0, ptr::null_mut()), GsStatus::NullArgument);
        let bad = [0xffu8, 0];
        assert_eq!(gs_run_builtin(bad.as_ptr().cast(), ptr::null(), 0, &mut out), GsStatus::InvalidUtf8);
        let mut passed = false;
        assert_eq!(gs_run_passed(ptr::null(), &mut passed), GsStatus::NullArgument);
        let missing = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(gs_run_config(missing.as_ptr(), ptr::null(), 0, &mut out), GsStatus::Config);
        let junk = CString::new("not json\n").unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(gs_replay_jsonl(junk.as_ptr(), &mut s), GsStatus::Replay);
        assert!(s.is_null());
        // freeing null is a no-op
        gs_run_free(ptr::null_mut());
        gs_string_free(ptr::null_mut());
    }
}

#[test]
fn goose_decode() {
    let hex = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/goose_trip.hex")).unwrap();
    let hex = hex.trim();
    let bytes: Vec<u8> = (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap()).collect();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gs_goose_decode(bytes.as_ptr(), bytes.len(), &mut s) }, GsStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(v["gocb_ref"], "PIED/LLN0$GO$gcb1");
    assert_eq!(v["st_num"], 2);
    assert_eq!(unsafe { gs_goose_decode(bytes.as_ptr(), 10, &mut s) }, GsStatus::Decode);
    assert!(last_error().contains("truncated"), "{}", last_error());
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(gs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
