use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Provenance record written next to a run's outputs. Timestamps live only
/// here, so every other output file is reproducible byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub dataset_path: Option<PathBuf>,
    pub seed: u64,
    /// SHA-256 of the exact config bytes the run used.
    pub config_sha256: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub metrics: BTreeMap<String, f64>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn start(command: &str, config_path: Option<&Path>, dataset_path: Option<&Path>, seed: u64, config_bytes: &[u8]) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            dataset_path: dataset_path.map(Path::to_path_buf),
            seed,
            config_sha256: sha256_hex(config_bytes),
            started_unix: unix_now(),
            finished_unix: 0,
            metrics: BTreeMap::new(),
        }
    }

    /// Stamps the end time and writes `manifest.json` atomically.
    pub fn finish(mut self, dir: &Path) -> CliResult {
        self.finished_unix = unix_now();
        let json = serde_json::to_vec_pretty(&self).expect("manifest serializes");
        impnet::io::write_atomic(dir.join("manifest.json"), &json)?;
        Ok(())
    }
}
