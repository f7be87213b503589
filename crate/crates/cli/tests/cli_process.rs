//! End-to-end runs of the compiled binary: exit codes, output files,
//! determinism across reruns and worker counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scenery-homog"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn read_csv(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn assert_status(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

const EFFECTIVE: &str = r#"{
  "kind": "effective",
  "model": { "kind": "gaussian_separable", "amplitude": 1.0, "ell_t": 1.0, "ell_x": 1.0, "d": 3 },
  "master_seed": 7
}"#;

#[test]
fn effective_run_hits_the_damping_oracle_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "eff.json", EFFECTIVE);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out in [&out_a, &out_b] {
        let output = bin()
            .args(["effective", "--config"])
            .arg(&config)
            .arg("--check")
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert_status(&output, 0);
    }

    let csv = read_csv(&out_a, "coefficients.csv");
    let time_mixing_row = csv
        .lines()
        .find(|l| l.starts_with("time_mixing"))
        .expect("time_mixing row");
    let rho: f64 = time_mixing_row.split(',').nth(1).unwrap().parse().unwrap();
    let oracle = (std::f64::consts::PI / 2.0).sqrt();
    assert!((rho - oracle).abs() < 1e-9, "rho = {rho}");

    // Same config, same hash, byte-identical tables.
    let ma = manifest(&out_a);
    let mb = manifest(&out_b);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(csv, read_csv(&out_b, "coefficients.csv"));
    assert_eq!(
        read_csv(&out_a, "coefficients.json"),
        read_csv(&out_b, "coefficients.json")
    );

    // The manifest embeds the resolved config minus its output location.
    assert_eq!(ma["resolved_config"]["kind"], "effective");
    assert_eq!(ma["resolved_config"]["master_seed"], 7);
    assert!(ma["resolved_config"].get("out").is_none());
    assert_eq!(ma["tool_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn seed_flag_overrides_the_config_and_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "eff.json", EFFECTIVE);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let base = bin()
        .args(["effective", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_a)
        .output()
        .unwrap();
    assert_status(&base, 0);
    let seeded = bin()
        .args(["effective", "--config"])
        .arg(&config)
        .args(["--seed", "99", "--out"])
        .arg(&out_b)
        .output()
        .unwrap();
    assert_status(&seeded, 0);

    let ma = manifest(&out_a);
    let mb = manifest(&out_b);
    assert_eq!(mb["resolved_config"]["master_seed"], 99);
    assert_ne!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn mismatched_subcommand_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "eff.json", EFFECTIVE);
    let output = bin()
        .args(["scenery", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_status(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/kind"), "stderr: {stderr}");
    assert!(stderr.contains("does not match"), "stderr: {stderr}");
}

#[test]
fn budget_violations_exit_with_a_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "fc.json",
        r#"{
          "kind": "field_check",
          "model": { "kind": "gaussian_separable", "amplitude": 1.0, "ell_t": 1.0, "ell_x": 1.0, "d": 3 },
          "master_seed": 1,
          "backends": ["harmonic"],
          "budgets": { "n_realizations": 0, "j_modes": 4 }
        }"#,
    );
    let output = bin()
        .args(["field-check", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_status(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/budgets/n_realizations"), "stderr: {stderr}");
    assert!(stderr.contains("at least 100"), "stderr: {stderr}");
}

const SCENERY_SMALL: &str = r#"{
  "kind": "scenery",
  "model": { "kind": "gaussian_separable", "amplitude": 1.0, "ell_t": 1.0, "ell_x": 1.0, "d": 3 },
  "master_seed": 23,
  "regime": "time_mixing",
  "alpha": 3.0,
  "t": 0.5,
  "eps_schedule": [0.5, 0.4],
  "budgets": { "n_paths": 40, "n_fields": 3, "j_modes": 6 },
  "block": { "gamma1": 0.4, "gamma2": 0.2 }
}"#;

#[test]
fn worker_count_does_not_change_the_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sc.json", SCENERY_SMALL);
    let out_1 = dir.path().join("w1");
    let out_4 = dir.path().join("w4");

    for (out, workers) in [(&out_1, "1"), (&out_4, "4")] {
        let output = bin()
            .args(["scenery", "--config"])
            .arg(&config)
            .args(["--workers", workers, "--out"])
            .arg(out)
            .output()
            .unwrap();
        assert_status(&output, 0);
    }

    for table in ["variance.csv", "blocks.csv", "variance.json", "blocks.json"] {
        assert_eq!(
            read_csv(&out_1, table),
            read_csv(&out_4, table),
            "{table} differs between 1 and 4 workers"
        );
    }
    assert_eq!(manifest(&out_1)["config_hash"], manifest(&out_4)["config_hash"]);
}

#[test]
fn workers_env_var_is_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sc.json", SCENERY_SMALL);
    let out_flag = dir.path().join("flag");
    let out_env = dir.path().join("env");

    let flag = bin()
        .args(["scenery", "--config"])
        .arg(&config)
        .args(["--workers", "2", "--out"])
        .arg(&out_flag)
        .output()
        .unwrap();
    assert_status(&flag, 0);
    let env = bin()
        .args(["scenery", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_env)
        .env("SCENERY_HOMOG_WORKERS", "3")
        .output()
        .unwrap();
    assert_status(&env, 0);
    assert_eq!(read_csv(&out_flag, "variance.csv"), read_csv(&out_env, "variance.csv"));
}

#[test]
fn failed_checks_exit_one_with_named_reasons() {
    // Two lambdas one decade apart cannot shed 95% of the corrector norm,
    // so this check fails by construction while the run itself succeeds.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "corr.json",
        r#"{
          "kind": "corrector",
          "model": { "kind": "gaussian_separable", "amplitude": 1.0, "ell_t": 1.0, "ell_x": 1.0, "d": 3 },
          "master_seed": 1,
          "alpha": 1.0,
          "lambda_schedule": [0.1, 0.01]
        }"#,
    );
    let out = dir.path().join("run");

    let without = bin()
        .args(["corrector", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_status(&without, 0);
    assert!(manifest(&out).get("checks").is_none());

    let with = bin()
        .args(["corrector", "--config"])
        .arg(&config)
        .arg("--check")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_status(&with, 1);
    let stdout = String::from_utf8_lossy(&with.stdout);
    assert!(stdout.contains("check failed: corrector_norm_final_fraction"), "stdout: {stdout}");

    let m = manifest(&out);
    let checks = m["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "corrector_norm_final_fraction"
        && c["passed"] == false));
    assert!(checks.iter().any(|c| c["name"] == "corrector_norm_decreasing_step_0"
        && c["passed"] == true));
}
