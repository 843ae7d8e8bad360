use std::path::Path;

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use idsnet_core::data::Fingerprint;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// What was run, on which data, with which settings. One per output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub dataset: Option<Fingerprint>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    /// File names written next to the manifest.
    pub artifacts: Vec<String>,
    /// Command-specific facts (class counts, hashes, ...).
    pub details: serde_json::Value,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config: serde_json::Value::Null,
            seed,
            dataset: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now(),
            finished_at: String::new(),
            artifacts: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    /// Stamps the end time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<RunManifest> {
        self.finished_at = now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(self)
    }

    pub fn load(dir: &Path) -> Result<RunManifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The manifest without wall-clock fields, for reproducibility checks.
    pub fn without_timestamps(&self) -> RunManifest {
        RunManifest {
            started_at: String::new(),
            finished_at: String::new(),
            args: Vec::new(),
            ..self.clone()
        }
    }
}
