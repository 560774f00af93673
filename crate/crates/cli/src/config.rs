//! Run configuration: built-in defaults, overridden by a TOML config file,
//! overridden by CLI flags. The resolved snapshot is embedded in the run
//! manifest so any reported number can be reproduced.

use crate::errors::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;
use stepuq_core::judge::JudgeConfig;
use stepuq_core::simulator::SimConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub judge: JudgeConfig,
    pub simulator: SimConfig,
    pub embeddings: EmbeddingsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingsConfig {
    pub endpoint: String,
    pub model: String,
    pub request_timeout_secs: u64,
}

impl Default for EmbeddingsConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            request_timeout_secs: 60,
        }
    }
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Overlay an optional CLI flag onto a config field.
pub fn overlay<T: Copy>(target: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *target = v;
    }
}

pub fn overlay_clone<T: Clone>(target: &mut T, flag: Option<&T>) {
    if let Some(v) = flag {
        *target = v.clone();
    }
}
