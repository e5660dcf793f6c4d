//! TOML group files.
//!
//! ```toml
//! model = "disc"
//! rank = 2
//! label = "symmetric"
//! integer_trace = false
//! generators = [[a, b, c, d], [a, b, c, d]]   # real matrices, row-major
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{group_from_matrices, SchottkyGroup};
use crate::error::{Error, Result};
use crate::moebius::{Model, MoebiusMap};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    pub model: Model,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub integer_trace: bool,
    pub generators: Vec<[f64; 4]>,
}

impl GroupFile {
    pub fn from_group(g: &SchottkyGroup) -> Self {
        GroupFile {
            model: g.model(),
            rank: g.rank(),
            label: g.label().map(str::to_string),
            integer_trace: g.integer_trace(),
            generators: g.input_generators().iter().map(|m| m.to_row_major()).collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::GroupFile(e.to_string()))
    }

    /// Serializes with 17 significant digits so matrices survive a round trip.
    pub fn to_toml(&self) -> String {
        let mut out = format!("model = \"{}\"\nrank = {}\n", self.model, self.rank);
        if let Some(l) = &self.label {
            out.push_str(&format!("label = {}\n", toml::Value::String(l.clone())));
        }
        out.push_str(&format!("integer_trace = {}\ngenerators = [\n", self.integer_trace));
        for g in &self.generators {
            let row: Vec<String> = g.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&format!("  [{}],\n", row.join(", ")));
        }
        out.push_str("]\n");
        out
    }

    pub fn build(&self) -> Result<SchottkyGroup> {
        if self.rank != self.generators.len() {
            return Err(Error::GroupFile(format!(
                "rank {} but {} generators",
                self.rank,
                self.generators.len()
            )));
        }
        let mats: Vec<MoebiusMap> = self
            .generators
            .iter()
            .map(|e| MoebiusMap::from_row_major(*e))
            .collect::<Result<_>>()?;
        if self.integer_trace {
            for (k, m) in mats.iter().enumerate() {
                let t = m.trace();
                if (t - t.round()).abs() > 1e-9 {
                    return Err(Error::GroupFile(format!(
                        "integer_trace set but generator {} has trace {t}",
                        k + 1
                    )));
                }
            }
        }
        let mut g = group_from_matrices(&mats, self.model)?;
        g.set_integer_trace(self.integer_trace || g.integer_trace());
        if let Some(l) = &self.label {
            g = g.with_label(l.clone());
        }
        Ok(g)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

pub fn read_group_file(path: &Path) -> Result<SchottkyGroup> {
    let text = std::fs::read_to_string(path)?;
    GroupFile::parse(&text)?.build()
}

pub fn write_group_file(path: &Path, g: &SchottkyGroup) -> Result<()> {
    std::fs::write(path, GroupFile::from_group(g).to_toml())?;
    Ok(())
}
