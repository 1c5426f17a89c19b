//! Run manifest: config echo, verdicts, output inventory; written
//! atomically (temp file + rename) at the end of every run.

use anyhow::{Context, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub const MANIFEST_SCHEMA: &str = "btlab-manifest/1";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    /// unix seconds
    pub started: u64,
    pub finished: u64,
    pub config: serde_json::Value,
    pub seed: u64,
    /// per-check verdicts ("pass"/"fail"/free-form result strings)
    pub verdicts: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(self)?;
        write_atomic(&dir.join("manifest.json"), &bytes)
    }
}
