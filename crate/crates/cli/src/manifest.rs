//! Run manifests: every artifact file traces back to the command, resolved
//! config, seeds, and input digests that produced it.

use crate::errors::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub command: String,
    pub created_unix: u64,
    pub seed: u64,
    /// Resolved configuration after precedence (flags > file > defaults).
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot digest {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn digest_paths(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Build and write `manifest-<command>.json` next to the outputs.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    seed: u64,
    config: serde_json::Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<RunManifest, CliError> {
    let inputs = digest_paths(inputs)?;
    let outputs = digest_paths(outputs)?;

    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update(seed.to_le_bytes());
    hasher.update(config.to_string().as_bytes());
    for d in &inputs {
        hasher.update(d.sha256.as_bytes());
    }
    let run_id = hex(&hasher.finalize())[..12].to_string();

    let manifest = RunManifest {
        run_id,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed,
        config,
        inputs,
        outputs,
    };
    let path = dir.join(format!("manifest-{command}.json"));
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, json + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(manifest)
}
