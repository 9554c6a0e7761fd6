//! Drives the `eosim` binary through its exit codes and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eosim")).args(args).output().expect("binary runs")
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.contract"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_into(dir: &Path, scenario: &str) -> Output {
    eosim(&["run", "--scenario", scenario, "--out", dir.to_str().unwrap()])
}

#[test]
fn bundled_run_writes_its_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(tmp.path(), "fault-free-round");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trace.jsonl", "summary.json", "balances.json", "throughput.csv"] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["final_state"]["head"], 252);
}

#[test]
fn json_format_writes_one_metrics_document() {
    let tmp = tempfile::tempdir().unwrap();
    let o = eosim(&["run", "--scenario", "fault-free-round", "--format", "json", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("metrics.json").is_file());
    assert!(!tmp.path().join("throughput.csv").exists());
}

#[test]
fn malformed_scenario_exits_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "name = \"bad\"\nduration_ms = 1000\nseed = 1\nproducerz = 3\n").unwrap();
    let o = run_into(&tmp.path().join("out"), path.to_str().unwrap());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("producerz") && msg.contains("line 4"), "{msg}");

    fs::write(&path, "name = \"bad\"\nduration_ms = 0\nseed = 1\n").unwrap();
    let o = run_into(&tmp.path().join("out"), path.to_str().unwrap());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duration_ms"), "{}", stderr(&o));
}

#[test]
fn missing_scenario_and_bad_read_mode_are_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_into(tmp.path(), "no-such-scenario").status.code(), Some(2));
    let o = eosim(&["run", "--scenario", "fault-free-round", "--read-mode", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
    let o = eosim(&["run", "--scenario", "fault-free-round", "--seed", "18446744073709551615", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn identical_inputs_give_identical_traces() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_into(a.path(), "late-joiner").status.code(), Some(0));
    assert_eq!(run_into(b.path(), "late-joiner").status.code(), Some(0));
    for f in ["trace.jsonl", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn seed_override_changes_the_trace() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_into(a.path(), "late-joiner").status.code(), Some(0));
    let o = eosim(&["run", "--scenario", "late-joiner", "--seed", "99", "--out", b.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(fs::read(a.path().join("trace.jsonl")).unwrap(), fs::read(b.path().join("trace.jsonl")).unwrap());
}

#[test]
fn report_reproduces_the_run_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let report_dir = tmp.path().join("report");
    assert_eq!(run_into(&run_dir, "ramsomware").status.code(), Some(0));
    let trace = run_dir.join("trace.jsonl");
    let o = eosim(&["report", trace.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["summary.json", "throughput.csv"] {
        assert_eq!(fs::read(run_dir.join(f)).unwrap(), fs::read(report_dir.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn replay_accepts_an_untouched_trace_and_locates_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_into(tmp.path(), "fault-free-round").status.code(), Some(0));
    let trace = tmp.path().join("trace.jsonl");
    let o = eosim(&["replay", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // Event 10 sits on line 12, after the header.
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let line = &mut lines[11];
    let at = line.find(|c: char| c.is_ascii_digit()).unwrap();
    let digit = line.as_bytes()[at];
    let flipped = if digit == b'9' { '8' } else { (digit + 1) as char };
    line.replace_range(at..=at, &flipped.to_string());
    let corrupt = tmp.path().join("corrupt.jsonl");
    fs::write(&corrupt, lines.join("\n") + "\n").unwrap();
    let o = eosim(&["replay", corrupt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("event 10 (line 12)"), "{}", stderr(&o));
}

#[test]
fn replay_rejects_a_foreign_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("t.jsonl");
    fs::write(&path, "{\"schema\":\"something-else/9\",\"scenario\":\"x\",\"seed\":1}\n").unwrap();
    assert_eq!(eosim(&["replay", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn lint_flags_every_labelled_vulnerability() {
    let vulnerable = [
        ("fakeeos-vuln", "fake-eos"),
        ("fakenotify-vuln", "fake-notification"),
        ("random-vuln", "predictable-randomness"),
        ("withdraw-noauth-vuln", "missing-auth"),
        ("batch-overflow-vuln", "integer-overflow"),
    ];
    let paths: Vec<String> = vulnerable.iter().map(|(n, _)| corpus(n).display().to_string()).collect();
    let mut args = vec!["lint"];
    args.extend(paths.iter().map(String::as_str));
    let o = eosim(&args);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), vulnerable.len(), "{text}");
    for ((_, class), path) in vulnerable.iter().zip(&paths) {
        let line = text.lines().find(|l| l.starts_with(path.as_str())).unwrap();
        assert!(line.contains(class), "{line}");
    }
}

#[test]
fn lint_passes_the_hardened_set() {
    let names = ["fakeeos-safe", "fakenotify-safe", "random-safe", "withdraw-auth-safe", "batch-overflow-safe"];
    let paths: Vec<String> = names.iter().map(|n| corpus(n).display().to_string()).collect();
    let mut args = vec!["lint", "--format", "json"];
    args.extend(paths.iter().map(String::as_str));
    let o = eosim(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc.as_array().unwrap().len(), names.len());
    assert!(doc.as_array().unwrap().iter().all(|f| f["findings"].as_array().unwrap().is_empty()));
}

#[test]
fn lint_of_an_empty_file_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("empty.contract");
    fs::write(&path, "").unwrap();
    let o = eosim(&["lint", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty.contract:"), "{}", stderr(&o));
}
