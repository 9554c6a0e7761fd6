use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use eosim_ffi::*;

fn last_error() -> String {
    let p = eosim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn bundled_run_exposes_head_trace_and_summary() {
    let name = CString::new("fault-free-round").unwrap();
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(eosim_run_bundled(name.as_ptr(), &mut run), EosimStatus::Ok);
        let mut head = 0u64;
        assert_eq!(eosim_run_head(run, &mut head), EosimStatus::Ok);
        assert_eq!(head, 252);
        let mut events = 0usize;
        assert_eq!(eosim_run_event_count(run, &mut events), EosimStatus::Ok);
        let trace = CStr::from_ptr(eosim_run_trace(run)).to_str().unwrap();
        assert_eq!(trace.lines().count(), events + 1);
        let summary = CStr::from_ptr(eosim_run_summary(run)).to_str().unwrap();
        assert!(summary.contains("\"scenario\": \"fault-free-round\""));
        eosim_run_free(run);
    }
}

#[test]
fn bad_scenario_reports_the_field() {
    let text = CString::new("name = \"x\"\nduration_ms = 0\nseed = 1\n").unwrap();
    let mut run = ptr::null_mut();
    let status = unsafe { eosim_run_scenario(text.as_ptr(), &mut run) };
    assert_eq!(status, EosimStatus::InvalidInput);
    assert!(run.is_null());
    assert!(last_error().contains("duration_ms"));
}

#[test]
fn unknown_bundled_name_is_not_found() {
    let name = CString::new("no-such-scenario").unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { eosim_run_bundled(name.as_ptr(), &mut run) }, EosimStatus::NotFound);
}

#[test]
fn null_arguments_are_rejected() {
    let mut run = ptr::null_mut();
    unsafe {
        assert_eq!(eosim_run_scenario(ptr::null(), &mut run), EosimStatus::NullPointer);
        assert_eq!(eosim_run_head(ptr::null(), ptr::null_mut()), EosimStatus::NullPointer);
        assert!(eosim_run_trace(ptr::null()).is_null());
        eosim_run_free(ptr::null_mut());
        eosim_string_free(ptr::null_mut());
    }
}

#[test]
fn lint_counts_findings_and_returns_json() {
    let vuln = CString::new(eosim::contracts::corpus::text("fakeeos-vuln").unwrap()).unwrap();
    let mut count = 0usize;
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(eosim_lint(vuln.as_ptr(), &mut count, &mut json), EosimStatus::Ok);
        assert_eq!(count, 1);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("fake-eos"), "{text}");
        eosim_string_free(json);
    }
    let broken = CString::new("contract x\nhandler self a\n  bogus_step\nend\n").unwrap();
    assert_eq!(unsafe { eosim_lint(broken.as_ptr(), &mut count, ptr::null_mut()) }, EosimStatus::InvalidInput);
    assert!(last_error().contains("line 3"), "{}", last_error());
}

#[test]
fn entropy_and_gini_through_the_abi() {
    let counts = [12u64; 21];
    let mut h = 0.0;
    assert_eq!(unsafe { eosim_entropy_bits(counts.as_ptr(), counts.len(), &mut h) }, EosimStatus::Ok);
    assert!((h - 21f64.log2()).abs() < 1e-9);
    let values = [0.0, 0.0, 0.0, 5.0];
    let mut g = 0.0;
    assert_eq!(unsafe { eosim_gini(values.as_ptr(), values.len(), &mut g) }, EosimStatus::Ok);
    assert!((g - 0.75).abs() < 1e-12);
    assert_eq!(unsafe { eosim_gini(ptr::null(), 0, &mut g) }, EosimStatus::Empty);
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let lib = target_dir().join("libeosim_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "eosim.h"
int main(void) {
    uint64_t counts[3] = {1, 1, 2};
    double h = 0;
    if (eosim_entropy_bits(counts, 3, &h) != EOSIM_STATUS_OK) return 1;
    EosimRun *run = NULL;
    if (eosim_run_scenario("name = \"bad\"", &run) != EOSIM_STATUS_INVALID_INPUT) return 2;
    if (eosim_last_error() == NULL) return 3;
    printf("%.3f\n", h);
    return 0;
}
"#,
    )
    .unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1.500");
}
