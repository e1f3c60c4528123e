//! Helpers shared by the integration targets: running the binary from the
//! test data directory and the golden-file case table.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BLESS_VAR: &str = "PAULICTL_BLESS";

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn paulictl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paulictl"))
        .args(args)
        .current_dir(data_dir())
        .output()
        .expect("binary runs")
}

pub struct Case {
    pub name: &'static str,
    pub args: Vec<&'static str>,
    pub code: i32,
}

fn case(name: &'static str, code: i32, args: &[&'static str]) -> Case {
    Case { name, args: args.to_vec(), code }
}

pub fn cases(bench_out: &'static str) -> Vec<Case> {
    vec![
        case("plan_l1_third", 0, &["plan", "--p", "1", "--n", "2", "--eps", "0.5", "--delta", "1/3"]),
        case("plan_l1_decimal", 0, &["plan", "--p", "1", "--n", "2", "--eps", "0.5", "--delta", "0.3333"]),
        case("plan_linf_text", 0, &["plan", "-p", "inf", "-n", "4", "--eps", "0.1", "--delta", "1/3", "--output", "text"]),
        case("plan_bad_p", 1, &["plan", "--p", "0.5", "--n", "2", "--eps", "0.5", "--delta", "0.3"]),
        case("sample_identity", 0, &["sample", "--channel", "identity1.json", "-N", "3", "--seed", "7"]),
        case("sample_sparse_csv", 0, &["sample", "--channel", "sparse2.json", "-N", "6", "--seed", "7", "--output", "csv"]),
        case("learn_depolarizing", 0, &[
            "learn", "--channel", "depolarizing2.json", "-p", "1", "--eps", "0.3", "--delta", "1/3",
            "--trials", "4", "--seed", "11",
        ]),
        case("learn_boosted_csv", 0, &[
            "learn", "--channel", "sparse2.json", "-p", "2", "--eps", "0.2", "--delta", "0.2",
            "--trials", "3", "--boost", "3", "--seed", "5", "--output", "csv",
        ]),
        case("test_uniform", 0, &[
            "test-uniformity", "--channel", "uniform2.json", "-p", "2", "--eps", "0.5", "--trials", "5", "--seed", "3",
        ]),
        case("test_identity_text", 0, &[
            "test-uniformity", "--channel", "identity3.json", "-p", "inf", "--eps", "0.5", "--trials", "3",
            "--cplan", "1", "--seed", "3", "--output", "text",
        ]),
        case("entropy_uniform", 0, &["estimate-entropy", "--channel", "uniform3.json", "--samples", "60", "--seed", "2"]),
        case("support_sparse", 0, &["estimate-support", "--channel", "sparse2.json", "--samples", "40", "--seed", "2"]),
        case("diamond_exact", 0, &[
            "estimate-diamond", "--channel1", "bitflip1.json", "--channel2", "identity1.json", "--eps", "0.1",
            "--method", "exact",
        ]),
        case("diamond_plugin", 0, &[
            "estimate-diamond", "--channel1", "identity3.json", "--channel2", "uniform3.json", "--eps", "0.3",
            "--method", "plugin", "--seed", "4",
        ]),
        case("diamond_unseen", 0, &[
            "estimate-diamond", "--channel1", "identity3.json", "--channel2", "uniform3.json", "--eps", "0.5",
            "--method", "unseen", "--seed", "4",
        ]),
        case("diamond_shape_mismatch", 1, &[
            "estimate-diamond", "--channel1", "identity1.json", "--channel2", "uniform2.json", "--eps", "0.1",
            "--method", "exact",
        ]),
        case("verify_bell", 0, &[
            "verify-bell", "--channel", "identity1.json", "--channel", "depolarizing2.json", "--channel", "sparse2.json",
            "--output", "text",
        ]),
        case("verify_bell_nmax", 2, &["verify-bell", "--channel", "identity3.json", "--nmax", "2"]),
        case("make_channel", 0, &["make-channel", "--preset", "dephasing", "--q", "0.1", "-n", "2"]),
        case("bench_learn", 0, &["bench", "--config", "bench_learn.json", "--out", bench_out, "--quiet"]),
        case("bench_partial", 3, &["bench", "--config", "bench_partial.json", "--out", bench_out, "--quiet"]),
        case("bench_empty_grid", 1, &["bench", "--config", "bench_empty.json", "--out", bench_out]),
        case("missing_file", 1, &["sample", "--channel", "absent.json", "-N", "1", "--seed", "1"]),
    ]
}

/// Runs every golden case with stdout going to `bench_out` for bench runs.
/// Returns one message per mismatch; with `bless` the files are rewritten.
pub fn check_golden(bench_out: &'static str, bless: bool) -> Vec<String> {
    let mut mismatches = Vec::new();
    for c in cases(bench_out) {
        let o = paulictl(&c.args);
        let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
        if o.status.code() != Some(c.code) {
            mismatches.push(format!(
                "{}: exit {:?}, want {}; stderr: {}",
                c.name,
                o.status.code(),
                c.code,
                String::from_utf8_lossy(&o.stderr)
            ));
            continue;
        }
        let path = golden_dir().join(format!("{}.out", c.name));
        if bless {
            std::fs::write(&path, &stdout).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(want) if want == stdout => {}
            Ok(want) => mismatches.push(format!("{}:\n--- want\n{want}\n--- got\n{stdout}", c.name)),
            Err(_) => mismatches.push(format!("{}: missing {}; run with {BLESS_VAR}=1", c.name, path.display())),
        }
    }
    mismatches
}

/// A temporary directory path that lives for the rest of the process.
pub fn leaked_tempdir() -> &'static str {
    let dir = tempfile::tempdir().unwrap().keep();
    Box::leak(dir.display().to_string().into_boxed_str())
}
