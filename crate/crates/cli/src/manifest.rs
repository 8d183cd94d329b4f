//! The run manifest: one record per completed stage, pairing the
//! configuration hash the stage ran under with the artifacts it produced.
//! The manifest is what lets a rerun skip work that is already up to date
//! and refuse to mix artifacts from different configurations.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::artifacts::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hex SHA-256 over the stage's configuration view, its input file
    /// contents, and the hashes of the stages it depends on.
    pub hash: String,
    /// Artifact paths relative to the output directory, in write order.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    /// Loads the manifest from `dir`, or starts an empty one if this is the
    /// first run into that directory.
    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("{} is not a valid manifest", path.display()))
    }

    pub fn store(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn record(&mut self, stage: &str, hash: String, artifacts: Vec<String>) {
        self.stages
            .insert(stage.to_string(), StageRecord { hash, artifacts });
    }
}
