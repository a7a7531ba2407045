//! Run manifests: the full config, tool version and seeds, never timestamps,
//! so identical flags give byte-identical manifests.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub const SEED_RULE: &str = "item i uses base_seed + i (wrapping u64)";

pub fn build(command: &str, config: Value, items: Value) -> Value {
    json!({
        "tool": "gridcf",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed_rule": SEED_RULE,
        "config": config,
        "items": items,
    })
}

pub fn write(path: &Path, manifest: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing manifest {}", path.display()))
}

/// `tasks.csv` -> `tasks.csv.manifest.json`
pub fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
