use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance header written into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    /// SHA-256 of the config file bytes, or `none`.
    pub config_digest: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, flags: &impl Serialize, seed: u64, config: Option<&[u8]>) -> Self {
        let flags = match serde_json::to_value(flags) {
            Ok(serde_json::Value::Object(m)) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        Self {
            subcommand: subcommand.to_string(),
            flags,
            seed,
            config_digest: config.map_or_else(|| "none".to_string(), digest),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Single-line comment form for text and CSV outputs.
    pub fn comment(&self) -> String {
        format!(
            "# manifest {}\n",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
