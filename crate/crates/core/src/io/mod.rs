//! Delimited-text formats: case series, chains, configuration, result
//! tables and run manifests.

mod cases;
mod chain;
mod config;
mod manifest;
mod table;

pub use cases::{load_case_series, parse_case_series, write_case_series, CASE_HEADER};
pub use chain::{chain_header, parse_chain, read_chain, write_chain};
pub use config::{RunConfig, CONFIG_KEYS};
pub use manifest::{config_hash, sha256_hex, Manifest};
pub use table::{read_table, Table};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}
