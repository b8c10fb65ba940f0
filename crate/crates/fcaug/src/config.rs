//! Run configuration: a TOML file, `--set section.key=value` overrides and
//! built-in defaults for everything left out.

use std::fs;
use std::path::Path;

use fcaug_core::dae::SolverSettings;
use fcaug_core::data::TruthGeneratorSpec;
use fcaug_core::fcmodel::ModelParameters;
use fcaug_core::iiml::IimlConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Overrides the network seed and the truth-generator seed when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub workers: usize,
    /// Training cases for `train` and the held-out split of `evaluate`.
    pub training_ids: Vec<u32>,
    pub solver: SolverSettings,
    pub iiml: IimlConfig,
    pub truth: TruthGeneratorSpec,
    pub params: ModelParameters,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            workers: 1,
            training_ids: Vec::new(),
            solver: SolverSettings::default(),
            iiml: IimlConfig::default(),
            truth: TruthGeneratorSpec::default(),
            params: ModelParameters::default(),
        }
    }
}

/// Sets `table[a][b]...` along a dotted path, creating tables on the way.
fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::Config(format!("empty key in `{path}`")))?;
    let mut t = table;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| Error::Config(format!("`{p}` in `{path}` is not a table")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Parses `key=value`; the value is read as a TOML value, or as a string
/// when it is not one.
fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    let v = v.trim();
    let value = match format!("v = {v}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just parsed"),
        Err(_) => toml::Value::String(v.to_string()),
    };
    Ok((k.trim().to_string(), value))
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            let (k, v) = parse_override(o)?;
            set_path(&mut table, &k, v)?;
        }
        let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(seed) = cfg.seed {
            cfg.iiml.model_seed = seed;
            cfg.truth.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` if given, then applies the overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.iiml.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.truth.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Every setting, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}
