//! Record of what a run produced, written next to the artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the effective configuration in canonical TOML form.
    pub config_hash: String,
    pub seed: u64,
    /// Artifact paths relative to the output directory, by command.
    pub artifacts: BTreeMap<String, Vec<PathBuf>>,
    /// Unix seconds at which each command finished.
    pub finished_at: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    /// The manifest in `out`, or a fresh one. A manifest for a different
    /// configuration is replaced.
    pub fn open(out: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        let hash = config_hash(cfg);
        let path = out.join(MANIFEST_FILE);
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
            if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
                if m.config_hash == hash {
                    return Ok(m);
                }
            }
        }
        let mut versions = BTreeMap::new();
        versions.insert("greenhouse-harness".into(), env!("CARGO_PKG_VERSION").into());
        Ok(Self { config_hash: hash, seed: cfg.seed, versions, ..Self::default() })
    }

    /// Record a finished command. Paths are as written (under `out`) and
    /// must exist.
    pub fn record(&mut self, out: &Path, command: &str, artifacts: Vec<PathBuf>) -> Result<()> {
        let mut rel = Vec::with_capacity(artifacts.len());
        for p in artifacts {
            if !p.exists() {
                return Err(Error::Data(format!("artifact {} was not written", p.display())));
            }
            rel.push(p.strip_prefix(out).map(Path::to_path_buf).unwrap_or(p));
        }
        self.artifacts.insert(command.into(), rel);
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.finished_at.insert(command.into(), now);
        Ok(())
    }

    pub fn save(&self, out: &Path) -> Result<PathBuf> {
        let path = out.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(Error::io(&path))?;
        Ok(path)
    }

    /// Paths listed by any command that no longer exist.
    pub fn missing(&self, out: &Path) -> Vec<PathBuf> {
        self.artifacts.values().flatten().filter(|p| !out.join(p).exists()).cloned().collect()
    }
}
