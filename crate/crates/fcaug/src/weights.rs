//! Plain-text network weights.
//!
//! ```text
//! fcaug-weights
//! format_version = 1
//! sizes = 8 7 7 1
//! seed = 0
//! provenance = <one line of free text>
//! bounds_min = <8 numbers>
//! bounds_max = <8 numbers>
//! layer_0_weights = <n_out * n_in numbers, row-major by output unit>
//! layer_0_biases = <n_out numbers>
//! ...
//! sha256 = <hex digest of every byte above this line>
//! ```
//!
//! Numbers use the shortest form that parses back to the same `f64`, so a
//! save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use fcaug_core::features::{NormalizationBounds, NUM_FEATURES};
use fcaug_core::mlp::MlpModel;
use sha2::{Digest, Sha256};

use crate::cases::num;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "fcaug-weights";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

pub fn weights_text(model: &MlpModel, provenance: &str) -> String {
    let mut body = format!("{MAGIC}\nformat_version = {FORMAT_VERSION}\n");
    let sizes: Vec<String> = model.sizes().iter().map(|s| s.to_string()).collect();
    body += &format!("sizes = {}\n", sizes.join(" "));
    body += &format!("seed = {}\n", model.seed);
    body += &format!("provenance = {}\n", provenance.replace(['\n', '\r'], " "));
    body += &format!("bounds_min = {}\n", join(&model.bounds.min));
    body += &format!("bounds_max = {}\n", join(&model.bounds.max));
    let mut off = 0;
    for (l, w) in model.sizes().windows(2).enumerate() {
        let (n_in, n_out) = (w[0], w[1]);
        let p = model.params();
        body += &format!("layer_{l}_weights = {}\n", join(&p[off..off + n_in * n_out]));
        off += n_in * n_out;
        body += &format!("layer_{l}_biases = {}\n", join(&p[off..off + n_out]));
        off += n_out;
    }
    let digest = sha256_hex(body.as_bytes());
    body + &format!("sha256 = {digest}\n")
}

pub fn save_weights(path: &Path, model: &MlpModel, provenance: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, weights_text(model, provenance)).map_err(|e| Error::io(path, e))
}

struct Lines<'a> {
    path: &'a Path,
    iter: std::str::Lines<'a>,
}

impl<'a> Lines<'a> {
    fn value(&mut self, key: &str) -> Result<&'a str> {
        let line = self.iter.next().ok_or_else(|| Error::artifact(self.path, format!("missing `{key}`")))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(" = ").or_else(|| (r == " =").then_some("")))
            .ok_or_else(|| Error::artifact(self.path, format!("expected `{key} = ...`, found `{line}`")))
    }

    fn numbers(&mut self, key: &str, expected: usize) -> Result<Vec<f64>> {
        let v = self.value(key)?;
        let out: Vec<f64> = v
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::artifact(self.path, format!("`{key}` holds a malformed number")))?;
        if out.len() != expected {
            return Err(Error::artifact(self.path, format!("`{key}` has {} values, expected {expected}", out.len())));
        }
        Ok(out)
    }
}

/// Parses weights text; returns the network and its provenance line.
pub fn parse_weights(path: &Path, text: &str) -> Result<(MlpModel, String)> {
    let marker = "sha256 = ";
    let at = text.rfind(marker).ok_or_else(|| Error::artifact(path, "missing checksum line"))?;
    let (body, tail) = text.split_at(at);
    let stored = tail[marker.len()..].trim();
    if sha256_hex(body.as_bytes()) != stored {
        return Err(Error::artifact(path, "checksum mismatch; refusing to load"));
    }
    let mut lines = Lines { path, iter: body.lines() };
    if lines.iter.next() != Some(MAGIC) {
        return Err(Error::artifact(path, "not a weights file"));
    }
    let version = lines.value("format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::artifact(path, format!("unsupported format_version {version}")));
    }
    let sizes: Vec<usize> = lines
        .value("sizes")?
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::artifact(path, "malformed `sizes`"))?;
    let seed: u64 = lines.value("seed")?.parse().map_err(|_| Error::artifact(path, "malformed `seed`"))?;
    let provenance = lines.value("provenance")?.to_string();
    let mut bounds = NormalizationBounds::default();
    bounds.min.copy_from_slice(&lines.numbers("bounds_min", NUM_FEATURES)?);
    bounds.max.copy_from_slice(&lines.numbers("bounds_max", NUM_FEATURES)?);
    let mut params = Vec::new();
    for (l, w) in sizes.windows(2).enumerate() {
        params.extend(lines.numbers(&format!("layer_{l}_weights"), w[0] * w[1])?);
        params.extend(lines.numbers(&format!("layer_{l}_biases"), w[1])?);
    }
    if let Some(extra) = lines.iter.next() {
        return Err(Error::artifact(path, format!("unexpected line `{extra}`")));
    }
    let model = MlpModel::from_parts(sizes, params, bounds, seed).map_err(|e| Error::artifact(path, e.to_string()))?;
    Ok((model, provenance))
}

pub fn load_weights(path: &Path) -> Result<(MlpModel, String)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_weights(path, &text)
}
