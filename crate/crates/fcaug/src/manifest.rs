//! Run manifests: what was run, with which settings, on which inputs, and
//! the checksums of everything written.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::sha256_hex;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool: String,
    pub command: String,
    pub wall_time_s: f64,
    /// Input name to path or checksum.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory, to its sha256.
    pub outputs: BTreeMap<String, String>,
    /// Every setting of the run, defaults included.
    pub config: toml::Table,
    /// Command-specific results.
    pub results: toml::Table,
}

impl Manifest {
    pub fn new(command: &str, config: toml::Table) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            tool: format!("fcaug {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            wall_time_s: 0.0,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config,
            results: toml::Table::new(),
        }
    }

    /// Records the checksum of `dir/rel`.
    pub fn add_output(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let path = dir.join(rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.outputs.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).map_err(|e| Error::artifact(&path, e.to_string()))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| Error::artifact(&path, e.to_string()))?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::artifact(&path, format!("unsupported format_version {}", m.format_version)));
        }
        Ok(m)
    }
}

/// A serialisable value as a TOML table.
pub fn to_table<T: Serialize>(value: &T) -> toml::Table {
    toml::Table::try_from(value).expect("value serialises to a table")
}
