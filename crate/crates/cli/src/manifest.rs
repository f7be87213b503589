//! Run manifests: the resolved config, its canonical hash, and the files a
//! run produced.  Equal hashes promise byte-identical result files.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::check::CheckRecord;

/// Canonical hash of a resolved config document.  The top-level `out` field
/// is dropped first: where results land must not change what they are.
/// serde_json maps iterate in key order, so serialization is canonical.
pub fn config_hash(resolved: &Value) -> String {
    let mut value = resolved.clone();
    if let Some(obj) = value.as_object_mut() {
        obj.remove("out");
    }
    let text = serde_json::to_string(&value).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    /// Not covered by the hash; re-runs of one config differ only here.
    pub wall_clock_seconds: f64,
    /// Result files written next to this manifest.
    pub outputs: Vec<String>,
    /// The config as executed, seed override applied, `out` dropped.
    pub resolved_config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckRecord>>,
}

impl RunManifest {
    pub fn new(resolved: &Value, wall_clock_seconds: f64, outputs: Vec<String>) -> Self {
        let mut config = resolved.clone();
        if let Some(obj) = config.as_object_mut() {
            obj.remove("out");
        }
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(resolved),
            wall_clock_seconds,
            outputs,
            resolved_config: config,
            checks: None,
        }
    }
}
