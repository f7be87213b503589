//! Determinism gate: the same config and master seed must produce
//! byte-identical tables for any worker count and across reruns.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_scenery-homog");

/// Small enough to run three times in seconds, parallel enough (20 field
/// realizations fan out across workers) to catch ordering bugs.
const SCENERY: &str = r#"{
  "kind": "scenery",
  "model": {"kind": "gaussian_separable", "amplitude": 1.0, "ell_t": 1.0, "ell_x": 1.0, "d": 3},
  "regime": "time_mixing",
  "alpha": 3.0,
  "t": 0.5,
  "eps_schedule": [0.5, 0.4],
  "budgets": {"n_paths": 30, "n_fields": 20, "j_modes": 6},
  "block": {"gamma1": 0.4, "gamma2": 0.2},
  "master_seed": 424242
}"#;

const EFFECTIVE: &str = r#"{
  "kind": "effective",
  "model": {"kind": "gaussian_separable", "amplitude": 1.0, "ell_t": 1.0, "ell_x": 1.0, "d": 3},
  "master_seed": 424242
}"#;

fn run(subcommand: &str, config: &Path, out: &Path, workers: Option<u32>) {
    let mut cmd = Command::new(BIN);
    cmd.arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out);
    if let Some(w) = workers {
        cmd.arg("--workers").arg(w.to_string());
    }
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "{subcommand} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Bytes of every CSV in the directory, keyed by file name.
fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output dir exists") {
        let path = entry.expect("dir entry").path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, std::fs::read(&path).expect("csv readable"));
        }
    }
    assert!(!out.is_empty(), "no CSV emitted in {}", dir.display());
    out
}

#[test]
fn reruns_and_worker_counts_leave_the_tables_byte_identical() {
    let tmp = TempDir::new().unwrap();
    for (subcommand, config_text) in [("scenery", SCENERY), ("effective", EFFECTIVE)] {
        let config = tmp.path().join(format!("{subcommand}.json"));
        std::fs::write(&config, config_text).unwrap();

        let runs = [
            ("one worker", Some(1)),
            ("four workers", Some(4)),
            ("one worker rerun", Some(1)),
            ("default workers", None),
        ];
        let mut baseline: Option<BTreeMap<String, Vec<u8>>> = None;
        for (i, (label, workers)) in runs.iter().enumerate() {
            let out = tmp.path().join(format!("{subcommand}-{i}"));
            run(subcommand, &config, &out, *workers);
            let bytes = csv_bytes(&out);
            match &baseline {
                None => baseline = Some(bytes),
                Some(reference) => {
                    let same = *reference == bytes;
                    println!(
                        "[{}] {subcommand} tables byte-identical under {label}",
                        if same { "PASS" } else { "FAIL" }
                    );
                    assert!(same, "{subcommand} CSVs diverged under {label}");
                }
            }
        }
    }
}
