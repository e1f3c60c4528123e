//! Behavioural checks of the binary beyond the golden outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn paulictl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paulictl"))
        .args(args)
        .current_dir(data_dir())
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let o = paulictl(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_command_is_a_usage_error() {
    let o = paulictl(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(paulictl(&["--help"]).status.code(), Some(0));
}

#[test]
fn plan_example() {
    let o = paulictl(&["plan", "--p", "1", "--n", "2", "--eps", "0.5", "--delta", "1/3"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["n_upper"], 192);
    assert_eq!(v["n_lower"], 64);
    assert_eq!(v["regime"], "small-eps");
}

#[test]
fn identity_channel_samples_are_zero() {
    let v = json(&paulictl(&["sample", "--channel", "identity1.json", "-N", "3", "--seed", "7"]));
    let outcomes = v["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 3);
    assert!(outcomes.iter().all(|o| o["index"] == 0 && o["label"] == "I"));
    assert_eq!(v["seed"], 7);
}

#[test]
fn echoed_seed_reproduces_output() {
    let args = ["learn", "--channel", "sparse2.json", "-p", "1", "--eps", "0.3", "--delta", "1/3", "--trials", "3"];
    let first = paulictl(&args);
    assert!(first.status.success());
    assert!(String::from_utf8_lossy(&first.stderr).contains("using seed"));
    let seed = json(&first)["seed"].as_u64().unwrap().to_string();
    let mut again: Vec<&str> = args.to_vec();
    again.extend(["--seed", &seed]);
    let second = paulictl(&again);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn quiet_silences_notes() {
    let o = paulictl(&["sample", "--channel", "identity1.json", "-N", "1", "--quiet"]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty());
}

#[test]
fn bench_writes_reproducible_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "4")] {
        let out = dir.path().to_str().unwrap();
        let o = paulictl(&["bench", "--config", "bench_learn.json", "--out", out, "--workers", workers, "-q"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let load = |d: &tempfile::TempDir| -> pauli_channel::bench::ExperimentReport {
        let text = std::fs::read_to_string(d.path().join("report.json")).unwrap();
        serde_json::from_str::<pauli_channel::bench::ExperimentReport>(&text).unwrap().without_timing()
    };
    let (ra, rb) = (load(&a), load(&b));
    assert_eq!(ra, rb);
    assert_eq!(ra.records.len(), 8 * 3);
    assert_eq!(ra.format_version, pauli_channel::bench::FORMAT_VERSION);

    // CSV rows agree once the timing column is dropped.
    let strip = |d: &tempfile::TempDir| -> Vec<String> {
        std::fs::read_to_string(d.path().join("records.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn seed_flag_overrides_bench_config() {
    let a = tempfile::tempdir().unwrap();
    let out = a.path().to_str().unwrap();
    let o = paulictl(&["bench", "--config", "bench_learn.json", "--out", out, "--seed", "99", "-q"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["seed"], 99);
    let text = std::fs::read_to_string(a.path().join("report.json")).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["config"]["master_seed"], 99);
}

#[test]
fn support_promise_warning() {
    // Sparse channels have weights below 1/4^n only if drawn so; the
    // depolarizing(0.3) file certainly does.
    let o = paulictl(&["estimate-support", "--channel", "depolarizing2.json", "--samples", "50", "--seed", "1"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["promise_holds"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn every_output_format_works() {
    for fmt in ["json", "csv", "text"] {
        let o = paulictl(&["sample", "--channel", "sparse2.json", "-N", "4", "--seed", "1", "--output", fmt]);
        assert!(o.status.success(), "{fmt}");
        assert!(!o.stdout.is_empty());
    }
}
