//! Config-driven experiment runner over the core library: validates a JSON
//! config, dispatches to the matching pipeline, and writes CSV/JSON tables
//! plus a manifest that pins the resolved config and its hash.

pub mod check;
pub mod config;
pub mod manifest;
pub mod runner;
pub mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::Value;

use check::CheckRecord;
use config::{ExperimentConfig, Kind};
use manifest::RunManifest;
use table::Format;

/// Flag-level overrides, applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub check: bool,
}

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub checks_passed: Option<bool>,
}

/// Apply overrides to both the typed config and the raw document, so the
/// hash and manifest describe exactly what ran.
fn resolve(
    config: &mut ExperimentConfig,
    raw: &mut Value,
    overrides: &Overrides,
) -> PathBuf {
    if let Some(seed) = overrides.seed {
        config.set_seed(seed);
        raw["master_seed"] = seed.into();
    }
    if let Some(out) = &overrides.out {
        let s = out.to_string_lossy().into_owned();
        config.set_out(s.clone());
        raw["out"] = s.into();
    }
    match &config.common().out {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from("runs").join(config.kind().config_name()),
    }
}

/// Run a validated config end to end: execute the experiment, write every
/// table as CSV and JSON, and drop `manifest.json` beside them.  Returns the
/// check verdict when `--check` was requested.
pub fn run(
    mut config: ExperimentConfig,
    mut raw: Value,
    overrides: &Overrides,
) -> Result<RunOutcome> {
    let out_dir = resolve(&mut config, &mut raw, overrides);
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let started = Instant::now();
    let result = runner::execute(&config)?;
    let wall = started.elapsed().as_secs_f64();

    let mut outputs = Vec::new();
    for (name, table) in &result.tables {
        let csv_path = out_dir.join(format!("{name}.csv"));
        table::emit(table, Format::Csv, &csv_path)?;
        outputs.push(format!("{name}.csv"));
        let json_path = out_dir.join(format!("{name}.json"));
        table::emit(table, Format::Json, &json_path)?;
        outputs.push(format!("{name}.json"));
    }

    let mut manifest = RunManifest::new(&raw, wall, outputs);
    let checks_passed = if overrides.check {
        let passed = CheckRecord::all_passed(&result.checks);
        manifest.checks = Some(result.checks);
        Some(passed)
    } else {
        None
    };

    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, text + "\n")
        .with_context(|| format!("writing {}", manifest_path.display()))?;

    Ok(RunOutcome {
        out_dir,
        manifest,
        checks_passed,
    })
}

/// Load and validate a config file, enforcing that its `kind` matches the
/// subcommand it was passed to.
pub fn load_config(path: &Path, expected: Kind) -> Result<(ExperimentConfig, Value), config::ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| config::ConfigError {
        pointer: "/".into(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let (config, raw) = config::parse_config(&text)?;
    if config.kind() != expected {
        return Err(config::ConfigError {
            pointer: "/kind".into(),
            message: format!(
                "config kind `{}` does not match the `{}` subcommand",
                config.kind().config_name(),
                expected.config_name()
            ),
        });
    }
    Ok((config, raw))
}
