//! JSON run manifest written next to every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use featprop::{MemoryAccount, PushConfig, ReuseConfig, TrainConfig, WorkStats};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<InputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let hash = Sha256::digest(&bytes);
    Ok(InputDigest {
        path: path.to_path_buf(),
        bytes: bytes.len() as u64,
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// Seconds per phase; phases a command does not run stay at zero.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub precompute_s: f64,
    pub train_s: f64,
    pub inference_s: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ResolvedConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub push: Option<PushConfig>,
    /// `None` with `reuse_enabled = false` when Feature-Reuse was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reuse: Option<ReuseConfig>,
    pub reuse_enabled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetrize: Option<bool>,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: ResolvedConfig,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub timings: Timings,
    /// Largest allocation-accounted footprint of the run, in bytes.
    pub peak_memory_bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory: Option<MemoryAccount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub work: Option<WorkStats>,
    /// Command-specific results.
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: ResolvedConfig::default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Timings::default(),
            peak_memory_bytes: 0,
            memory: None,
            work: None,
            summary: serde_json::Value::Null,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// `out.bin` -> `out.bin.manifest.json` unless a path was given.
pub fn manifest_path(explicit: Option<&Path>, artifact: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut name = artifact.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    })
}
