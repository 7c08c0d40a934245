use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{write_text, RunConfig};
use crate::error::Result;

/// SHA-256 of the canonical text form of a config, in hex.
pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(config.to_text().as_bytes())
}

/// SHA-256 of `bytes` in lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Flat `key=value` record of what produced a set of outputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn for_config(config: &RunConfig) -> Self {
        let mut m = Manifest::default();
        m.push("tool", env!("CARGO_PKG_NAME"));
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("seed", config.seed);
        m.push("config_hash", config_hash(config));
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }
}
