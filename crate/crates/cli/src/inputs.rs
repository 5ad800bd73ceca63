//! Resolving models, datasets, grids and sampler settings from flags.

use std::path::{Path, PathBuf};

use clap::Args;
use qbm_core::datasets::{builtin, fixture_json, load_dataset, write_dataset};
use qbm_core::metrics::BetaGrid;
use qbm_core::samplers::Backend;
use qbm_core::{BoltzmannMachine, Dataset, SamplerConfig};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::Run;

/// A model file or a bundled fixture; exactly one is required.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Bundled fixture name (e.g. fig7a_and, table3_two_phase).
    #[arg(long)]
    pub fixture: Option<String>,
}

impl ModelArgs {
    pub fn load(&self, run: &mut Run) -> CliResult<BoltzmannMachine> {
        match (&self.model, &self.fixture) {
            (Some(path), _) => {
                run.add_input_file(path)?;
                Ok(BoltzmannMachine::load(path)?)
            }
            (None, Some(name)) => {
                run.add_input(format!("fixture:{name}"), fixture_json(name)?.as_bytes());
                Ok(qbm_core::datasets::load_fixture(name)?)
            }
            (None, None) => Err(CliError::input("one of --model or --fixture is required")),
        }
    }
}

fn looks_like_path(spec: &str) -> bool {
    spec.contains('/') || spec.contains('\\') || spec.ends_with(".csv")
}

/// A dataset CSV path, or a generator name (`and`, `or`, `xor`, `adder2`,
/// `two_phase`, `two_phase:<n>`).
pub fn resolve_dataset(spec: &str, run: &mut Run) -> CliResult<Dataset> {
    let path = Path::new(spec);
    if path.is_file() {
        run.add_input_file(path)?;
        return Ok(load_dataset(path)?);
    }
    if looks_like_path(spec) {
        return Err(CliError::input(format!("dataset file {spec} not found")));
    }
    let data = builtin(spec)?;
    let mut csv = Vec::new();
    write_dataset(&data, &mut csv)?;
    run.add_input(format!("builtin:{spec}"), &csv);
    Ok(data)
}

pub fn parse_grid(spec: &str) -> CliResult<BetaGrid> {
    Ok(spec.parse::<BetaGrid>()?)
}

/// Sampler backend flags shared by `sample` and `fit-beta`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplerArgs {
    /// exact, gibbs or remote.
    #[arg(long, default_value = "exact")]
    pub backend: Backend,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1000)]
    pub reads: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gibbs sweeps discarded before the first kept state.
    #[arg(long, default_value_t = 1000)]
    pub burn_in: u64,
    /// Gibbs sweeps between kept states.
    #[arg(long, default_value_t = 10)]
    pub thinning: u64,
    /// Exact backend: return the full probability table instead of draws.
    #[arg(long)]
    pub exhaustive: bool,
    /// Remote sampler URL (defaults to the QBM_ENDPOINT variable).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Remote request timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
}

impl SamplerArgs {
    pub fn config(&self) -> SamplerConfig {
        SamplerConfig {
            beta: self.beta,
            num_reads: self.reads,
            burn_in: self.burn_in,
            thinning: self.thinning,
            seed: self.seed,
            backend: self.backend,
            exhaustive: self.exhaustive,
            endpoint: self.endpoint.clone(),
            timeout_secs: self.timeout,
        }
    }
}
