//! JSON solution archives and stable configuration hashes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};
use crate::optimizer::BeamformerSolution;
use crate::scenario::ScenarioConfig;
use crate::zf::ZfOutcome;

/// Hex SHA-256 of the configuration's canonical JSON form.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("configuration serializes");
    hex(&Sha256::digest(&json))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionArchive {
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub proposed: Option<BeamformerSolution>,
    pub zf: Option<ZfOutcome>,
}

impl SolutionArchive {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            config_hash: config_hash(cfg),
            config: cfg.clone(),
            proposed: None,
            zf: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CoreError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        fs::write(path, json).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Loads an archive and checks the stored hash against its config.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let archive: Self = serde_json::from_str(&text).map_err(|e| CoreError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let actual = config_hash(&archive.config);
        if actual != archive.config_hash {
            return Err(CoreError::Parse {
                path: path.display().to_string(),
                message: format!("config hash {actual} does not match stored {}", archive.config_hash),
            });
        }
        Ok(archive)
    }
}
