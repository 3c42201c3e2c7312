//! End-to-end behaviour of the `fisher-hydro` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fisher_hydro_cli::config::RunConfig;
use fisher_hydro_cli::verdict::Verdict;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fisher-hydro"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn verdict(dir: &Path, test: &str) -> Verdict {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{test}.json"))).unwrap()).unwrap()
}

#[test]
fn empty_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let out = run(&["circulation", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_for_another_test_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "test = \"galilei\"\n").unwrap();
    let out = run(&["circulation", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "test = \"circulation\"\nresolution = 3\n").unwrap();
    assert_eq!(code(&run(&["circulation", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn missing_run_all_directory_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run-all", dir.path().join("absent").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_worker_count_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run-all", dir.path().to_str().unwrap()])
        .env("FISHER_HYDRO_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_mask_exits_with_numerical_abort() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fisher-el", "--mask-eps", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn repeated_runs_write_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run(&["circulation", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
    let csv_a = fs::read(a.path().join("circulation.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, fs::read(b.path().join("circulation.csv")).unwrap());
}

#[test]
fn effective_config_reproduces_the_run() {
    let first = tempfile::tempdir().unwrap();
    let out = run(&["complexifier", "--n", "1024", "--out", first.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = verdict(first.path(), "complexifier");
    assert_eq!(v.grid.n, 1024);

    let second = tempfile::tempdir().unwrap();
    let cfg = RunConfig { out: Some(second.path().to_path_buf()), ..v.effective_config.clone() };
    let path = first.path().join("effective.toml");
    fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    let out = run(&["complexifier", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let again = verdict(second.path(), "complexifier");
    assert_eq!(again.checks, v.checks);
    assert_eq!(
        fs::read(first.path().join("complexifier_defects.csv")).unwrap(),
        fs::read(second.path().join("complexifier_defects.csv")).unwrap()
    );
}

#[test]
fn linear_superposition_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["superposition", "--beta", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = verdict(dir.path(), "superposition");
    assert_eq!(v.effective_config.betas, Some(vec![0.0]));
    assert!(v.checks.iter().any(|c| c.name == "linear_refined"));
}

#[test]
fn forced_coefficient_raises_the_momentum_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["scan-alpha", "--n", "1024", "--alpha-factor", "1.2", "--out", dir.path().to_str().unwrap()]);
    let v = verdict(dir.path(), "scan-alpha");
    let audit = v.advisories.iter().find(|c| c.group == "momentum_audit").unwrap();
    assert!(!audit.pass);
    // Advisories never gate.
    assert_eq!(code(&out), if v.pass { 0 } else { 1 });
}

#[test]
fn falsified_verdict_exits_with_one() {
    // An α window excluding the Fisher scale puts the minimum on the boundary.
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "scan-alpha", "--n", "1024", "--alpha-min", "1.2", "--alpha-max", "1.6", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!verdict(dir.path(), "scan-alpha").pass);
}
