use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::SamplerConfig;

use super::{GradientMode, Resampling};

/// Starting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Every parameter i.i.d. uniform on `[-range, range]`, then clipped to the bounds.
    UniformRandom { range: f64 },
    FromFile { path: PathBuf },
}

impl Default for Init {
    fn default() -> Self {
        Init::UniformRandom { range: 0.5 }
    }
}

/// Hyperparameters of the momentum update and stopping rule. Loaded from
/// and saved as JSON; absent fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub eta: f64,
    pub lambda: f64,
    pub nu: f64,
    pub max_steps: usize,
    /// Stop once the largest parameter change of a step is at most this.
    pub delta_theta_min: f64,
    pub h_max: f64,
    pub j_max: f64,
    pub gradient_mode: GradientMode,
    /// Training beta (Exact mode) and backend settings (Sampled mode).
    pub sampler: SamplerConfig,
    pub init: Init,
    pub seed: u64,
    /// Defaults to `Always` in Exact mode and `WhenUnseen` in Sampled mode.
    pub resampling: Option<Resampling>,
    /// Record the loss every this many steps (and on the last step).
    pub loss_every: usize,
    /// Store the parameter vector in every trace record.
    pub record_parameters: bool,
    /// Also require `1e-5 <= lambda <= 1e-2` and `nu <= 0.9`.
    pub validate_ranges: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            eta: 0.1,
            lambda: 1e-5,
            nu: 0.6,
            max_steps: 1000,
            delta_theta_min: 1e-6,
            h_max: 1.0,
            j_max: 1.0,
            gradient_mode: GradientMode::Exact,
            sampler: SamplerConfig::default(),
            init: Init::default(),
            seed: 0,
            resampling: None,
            loss_every: 1,
            record_parameters: false,
            validate_ranges: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return fail(format!("eta {} must be positive", self.eta));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return fail(format!("lambda {} must lie in [0, 1)", self.lambda));
        }
        if !(0.0..1.0).contains(&self.nu) {
            return fail(format!("nu {} must lie in [0, 1)", self.nu));
        }
        if self.delta_theta_min.is_nan() || self.delta_theta_min < 0.0 {
            return fail("delta_theta_min must be nonnegative".into());
        }
        if !(self.h_max > 0.0 && self.j_max > 0.0) {
            return fail("h_max and j_max must be positive".into());
        }
        if self.loss_every == 0 {
            return fail("loss_every must be at least 1".into());
        }
        if let Init::UniformRandom { range } = self.init {
            if !(range >= 0.0 && range.is_finite()) {
                return fail(format!("init range {range} must be nonnegative"));
            }
        }
        if self.validate_ranges {
            if !(1e-5..=1e-2).contains(&self.lambda) {
                return fail(format!("lambda {} outside 1e-5..1e-2", self.lambda));
            }
            if self.nu > 0.9 {
                return fail(format!("nu {} above 0.9", self.nu));
            }
        }
        self.sampler.validate()
    }

    pub fn resampling(&self) -> Resampling {
        self.resampling.unwrap_or(match self.gradient_mode {
            GradientMode::Exact => Resampling::Always,
            GradientMode::Sampled => Resampling::WhenUnseen,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainingConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
