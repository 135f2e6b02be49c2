//! End-to-end checks of the command-line surface: exit-code classes, the
//! simulate -> verify round trip, and study output determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nsalpha"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const BASE_CONFIG: &str = r#"
[grid]
n = 8

[physics]
nu = 1.0
alpha = 1.0
beta = 0.5

[forcing]
kind = "steady"
seed = 7
slope = -2.0
hminus1 = 1.0

[time]
t_end = 0.1
dt = 0.01
"#;

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = BASE_CONFIG.replace("beta = 0.5", "beta = 1.5");
    let config = write_config(dir.path(), &bad);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(0, 1)"), "stderr: {err}");
}

#[test]
fn unknown_study_exits_with_code_2() {
    let out = bin().args(["study", "alpha_to_hero"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constants_prints_golden_k_alpha_beta() {
    let out = bin()
        .args(["constants", "--alpha", "1", "--beta", "0.25"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let value = text
        .lines()
        .find(|l| l.starts_with("K_alpha_beta"))
        .and_then(|l| l.split('=').nth(1))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .unwrap();
    assert_eq!(value, 32.0);
}

#[test]
fn simulate_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let outdir = dir.path().join("run");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .arg("--snapshot")
        .arg(outdir.join("snapshot_final.snap"))
        .arg("--ledger")
        .arg(outdir.join("ledger.csv"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("verify: all invariants PASS"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn unforced_single_mode_simulate_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[grid]
n = 8

[physics]
nu = 1.0
alpha = 1.0
beta = 0.5

[initial]
kind = "mode"
mode = [1, 0, 0]
amplitude = 1.0

[time]
t_end = 0.2
dt = 0.02
"#;
    let config = write_config(dir.path(), body);
    let outdir = dir.path().join("run");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .arg("--snapshot")
        .arg(outdir.join("snapshot_final.snap"))
        .arg("--ledger")
        .arg(outdir.join("ledger.csv"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("verify: all invariants PASS"));
}

#[test]
fn filter_solve_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), BASE_CONFIG);
    let out = bin()
        .args(["filter-solve", "--config"])
        .arg(&config)
        .args(["--alpha", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("l2_contraction = PASS"), "{text}");
    assert!(text.contains("h1_bound_check = PASS"), "{text}");
}

#[test]
fn study_outputs_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let study_config = format!(
        "{BASE_CONFIG}\n[study]\nkind = \"alpha_to_zero\"\nparams = [0.4, 0.2, 0.1]\n"
    );
    let config = write_config(dir.path(), &study_config);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let outdir = dir.path().join(run);
        let out = bin()
            .args(["study", "alpha_to_zero", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&outdir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("verdict = PASS"));
        outputs.push(std::fs::read(outdir.join("alpha_to_zero.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
