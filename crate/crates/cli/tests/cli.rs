use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn csbp() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_csbp"));
    cmd.env_remove("CSBP_WORKERS");
    cmd
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn population(n_paths: u64) -> String {
    format!(
        r#"{{
            "scenario": "population",
            "model": {{"mu": {{"family": "atoms", "atoms": [[2.0, 1.0]]}}, "c": 1.0,
                       "f": {{"kind": "logistic", "a": 1.0, "b": 1.0}}}},
            "scale": {{"n": 10, "grid": 11}},
            "mc": {{"n_paths": {n_paths}, "master_seed": 3}},
            "output": {{"max_exported_paths": 20}}
        }}"#
    )
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

#[test]
fn passing_study_exits_zero_and_writes_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "pop.json", &population(200));
    let out_dir = tmp.path().join("out");
    let out = run(csbp()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("PASS quadratic_variation")));
    for f in ["report.json", "manifest.json", "paths.csv", "moments.csv"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "population");
    assert_eq!(report["provenance"]["master_seed"], 3);
}

#[test]
fn failing_check_exits_two() {
    // a threshold no sample can beat
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "conv.json",
        r#"{
            "scenario": "converge",
            "model": {"mu": {"family": "atoms", "atoms": [[2.0, 1.0]]}, "c": 1.0},
            "scale": {"n": [5, 10]},
            "numerics": {"ks_threshold": 1e-9},
            "mc": {"n_paths": 50}
        }"#,
    );
    let out = run(csbp()
        .arg("converge")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o")));
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL ks_final"));
}

#[test]
fn configuration_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("o");

    let missing = tmp.path().join("nope.json");
    let out = csbp().args(["simulate", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let bad = write_config(
        tmp.path(),
        "bad.json",
        r#"{
            "scenario": "population",
            "model": {"mu": {"family": "atoms", "atoms": [[2.0, 1.0]]}, "c": 1.0},
            "scale": {"n": 10},
            "mc": {"n_paths": 0}
        }"#,
    );
    let out = csbp()
        .args(["simulate", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mc.n_paths"));

    let unknown = write_config(
        tmp.path(),
        "unknown.json",
        &population(10).replace("\"grid\"", "\"gird\""),
    );
    let out = csbp()
        .args(["simulate", "--config"])
        .arg(&unknown)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let ok = write_config(tmp.path(), "pop.json", &population(10));
    let out = csbp()
        .args(["sde", "--config"])
        .arg(&ok)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("population"));
    assert!(!out_dir.exists());
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "pop.json", &population(64));
    let one = tmp.path().join("w1");
    let four = tmp.path().join("w4");
    let a = run(csbp()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&one)
        .args(["--workers", "1"]));
    let b = run(csbp()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&four)
        .env("CSBP_WORKERS", "4"));
    assert_eq!(a.status.code(), b.status.code());
    for f in ["manifest.json", "report.json", "paths.csv", "moments.csv"] {
        assert_eq!(
            fs::read(one.join(f)).unwrap(),
            fs::read(four.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn seed_flag_changes_the_sample() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "pop.json", &population(32));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(csbp().arg("simulate").arg("--config").arg(&cfg).arg("--out").arg(&a));
    run(csbp()
        .arg("simulate")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .args(["--seed", "99"]));
    assert_ne!(
        fs::read(a.join("paths.csv")).unwrap(),
        fs::read(b.join("paths.csv")).unwrap()
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["master_seed"], 99);
}
