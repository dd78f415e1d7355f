//! Run manifests: everything needed to rerun a command and get the same
//! bytes back.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved configuration (after defaults and environment
    /// overrides).
    pub config: serde_json::Value,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub version: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &impl Serialize,
        seed: u64,
        inputs: &[&Path],
    ) -> Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

pub fn digest(path: &Path) -> Result<InputDigest> {
    let bytes = fs::read(path)?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}
