//! The sealed record of how a synthetic case set was made. Only
//! [`verify`](crate::pipeline::verify_truth) reads it; loading, training and
//! evaluation never touch this module.

use std::fs;
use std::path::{Path, PathBuf};

use fcaug_core::augment::FixedPointSettings;
use fcaug_core::dae::SolverSettings;
use fcaug_core::data::TruthGeneratorSpec;
use fcaug_core::fcmodel::ModelParameters;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const SEALED_FILE: &str = "sealed/truth.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SealedTruth {
    pub format_version: u32,
    pub conditions_sha256: String,
    pub spec: TruthGeneratorSpec,
    pub fixed_point: FixedPointSettings,
    pub solver: SolverSettings,
    pub params: ModelParameters,
}

pub fn sealed_path(dir: &Path) -> PathBuf {
    dir.join(SEALED_FILE)
}

pub fn write(dir: &Path, sealed: &SealedTruth) -> Result<()> {
    let path = sealed_path(dir);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = toml::to_string(sealed).map_err(|e| Error::artifact(&path, e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read(dir: &Path) -> Result<SealedTruth> {
    let path = sealed_path(dir);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let s: SealedTruth = toml::from_str(&text).map_err(|e| Error::artifact(&path, e.to_string()))?;
    if s.format_version != FORMAT_VERSION {
        return Err(Error::artifact(&path, format!("unsupported format_version {}", s.format_version)));
    }
    Ok(s)
}
