use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{pair_key, Basis, BoltzmannMachine, Bounds};

/// On-disk JSON form of a machine.
///
/// ```json
/// {"basis": "01", "m_I": 2, "m_O": 1, "n": 1,
///  "biases": [...], "couplings": [[k, l, value], ...],
///  "h_max": 1.0, "j_max": 1.0}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub basis: Basis,
    #[serde(rename = "m_I")]
    pub num_input: usize,
    #[serde(rename = "m_O")]
    pub num_output: usize,
    #[serde(rename = "n")]
    pub num_hidden: usize,
    pub biases: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub h_max: f64,
    pub j_max: f64,
    #[serde(default = "default_true")]
    pub enforce_bounds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<ModelMetadata>,
}

fn default_true() -> bool {
    true
}

/// Provenance attached to trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub dataset_id: String,
    pub config_hash: String,
    pub seed: u64,
    /// Inverse temperature the sampler realised during training.
    pub training_beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
}

impl ModelFile {
    pub fn from_machine(bm: &BoltzmannMachine) -> Self {
        ModelFile {
            basis: bm.basis(),
            num_input: bm.num_input(),
            num_output: bm.num_output(),
            num_hidden: bm.num_hidden(),
            biases: bm.biases().to_vec(),
            couplings: bm.couplings().collect(),
            h_max: bm.bounds().h_max,
            j_max: bm.bounds().j_max,
            enforce_bounds: bm.bounds().enforce,
            caveat: None,
            metadata: None,
        }
    }

    pub fn to_machine(&self) -> Result<BoltzmannMachine> {
        let n = self.num_input + self.num_output + self.num_hidden;
        if self.biases.len() != n {
            return Err(Error::invalid(format!(
                "model lists {} biases for {n} nodes",
                self.biases.len()
            )));
        }
        if !(self.h_max > 0.0 && self.j_max > 0.0) {
            return Err(Error::invalid("h_max and j_max must be positive"));
        }
        let mut couplings = BTreeMap::new();
        for &(k, l, v) in &self.couplings {
            if k == l || k >= n || l >= n {
                return Err(Error::invalid(format!("bad coupling index ({k},{l})")));
            }
            if couplings.insert(pair_key(k, l), v).is_some() {
                return Err(Error::invalid(format!("duplicate coupling ({k},{l})")));
            }
        }
        let bounds = Bounds { h_max: self.h_max, j_max: self.j_max, enforce: self.enforce_bounds };
        let bm = BoltzmannMachine::from_raw_parts(
            (self.num_input, self.num_output, self.num_hidden),
            self.biases.clone(),
            couplings,
            self.basis,
            bounds,
        );
        bm.check_bounds()?;
        Ok(bm)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

impl BoltzmannMachine {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ModelFile::load(path)?.to_machine()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        ModelFile::from_machine(self).save(path)
    }
}
