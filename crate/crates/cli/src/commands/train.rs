use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qbm_core::samplers::{sampler_for, Backend};
use qbm_core::training::{
    train_distribution_with, train_function_approximator_with, Architecture, Connectivity, GradientMode, Init,
};
use qbm_core::{TrainingConfig, TrainingTrace};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::inputs::resolve_dataset;
use crate::manifest::Run;

/// Training beta used when neither `--beta` nor a config file sets one.
pub const DEFAULT_TRAINING_BETA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Match the visible distribution (KL divergence).
    Distribution,
    /// Approximate outputs from inputs (conditional log-likelihood).
    Function,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gradient {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset CSV path or generator name (and, or, xor, adder2, two_phase).
    #[arg(long)]
    pub dataset: String,
    /// Architecture such as 3v1h (visible + hidden) or 4i3o10h.
    #[arg(long, default_value = "3v1h")]
    pub arch: String,
    /// Visible-hidden couplings only.
    #[arg(long)]
    pub bipartite: bool,
    #[arg(long, value_enum, default_value_t = Mode::Distribution)]
    pub mode: Mode,
    /// Number of independent restarts; the best run is reported.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First restart seed; restarts use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training config JSON; explicit flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub delta_theta_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub j_max: Option<f64>,
    /// Training inverse temperature [default: 3].
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub gradient: Option<Gradient>,
    /// Sampler backend for sampled gradients.
    #[arg(long)]
    pub backend: Option<Backend>,
    #[arg(long)]
    pub reads: Option<u64>,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Uniform initialisation half-width.
    #[arg(long, conflicts_with = "init_model")]
    pub init_range: Option<f64>,
    /// Start from a saved model instead of random parameters.
    #[arg(long)]
    pub init_model: Option<PathBuf>,
    /// Reject learning parameters outside the recommended ranges.
    #[arg(long)]
    pub strict_ranges: bool,
    /// Record the loss every N steps.
    #[arg(long)]
    pub loss_every: Option<usize>,
    #[arg(long, default_value = "out/train")]
    pub out_dir: PathBuf,
}

impl TrainArgs {
    pub fn training_config(&self, run: &mut Run) -> CliResult<TrainingConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                run.add_input_file(path)?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
                TrainingConfig::from_json(&text)?
            }
            None => {
                let mut c = TrainingConfig::default();
                c.sampler.beta = DEFAULT_TRAINING_BETA;
                c
            }
        };
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            };
        }
        set!(eta);
        set!(lambda);
        set!(nu);
        set!(max_steps);
        set!(delta_theta_min);
        set!(h_max);
        set!(j_max);
        set!(loss_every);
        if let Some(b) = self.beta {
            cfg.sampler.beta = b;
        }
        if let Some(g) = self.gradient {
            cfg.gradient_mode = match g {
                Gradient::Exact => GradientMode::Exact,
                Gradient::Sampled => GradientMode::Sampled,
            };
        }
        if let Some(b) = self.backend {
            cfg.sampler.backend = b;
        }
        if let Some(r) = self.reads {
            cfg.sampler.num_reads = r;
        }
        if self.endpoint.is_some() {
            cfg.sampler.endpoint = self.endpoint.clone();
        }
        if let Some(range) = self.init_range {
            cfg.init = Init::UniformRandom { range };
        }
        if let Some(path) = &self.init_model {
            cfg.init = Init::FromFile { path: path.clone() };
        }
        if let Init::FromFile { path } = &cfg.init {
            run.add_input_file(path)?;
        }
        cfg.validate_ranges |= self.strict_ranges;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    pub steps: usize,
    pub converged: bool,
    pub model: String,
    pub trace: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub mode: Mode,
    pub arch: String,
    pub beta: f64,
    pub loss: &'static str,
    pub runs: Vec<RunSummary>,
    pub best_seed: Option<u64>,
    pub best_loss: Option<f64>,
}

pub fn trace_csv(trace: &TrainingTrace) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn run(args: &TrainArgs) -> CliResult<TrainSummary> {
    let mut run = Run::create(&args.out_dir)?;
    let dataset = resolve_dataset(&args.dataset, &mut run)?;
    let mut arch: Architecture = args.arch.parse()?;
    if args.bipartite {
        arch.connectivity = Connectivity::Bipartite;
    }
    let base = args.training_config(&mut run)?;
    if args.seeds == 0 {
        return Err(CliError::input("--seeds must be at least 1"));
    }
    run.write_json("config.json", &base)?;

    let mut runs = Vec::new();
    let mut best: Option<(u64, f64, qbm_core::BoltzmannMachine)> = None;
    for seed in args.seed..args.seed + args.seeds {
        let cfg = TrainingConfig { seed, ..base.clone() };
        run.add_seed(seed);
        let mut sampler = sampler_for(&cfg.sampler)?;
        let (bm, trace) = match args.mode {
            Mode::Distribution => train_distribution_with(&dataset, &arch, &cfg, sampler.as_mut())?,
            Mode::Function => train_function_approximator_with(&dataset, &arch, &cfg, sampler.as_mut())?,
        };
        let model = format!("model_seed{seed}.json");
        let trace_name = format!("trace_seed{seed}.csv");
        let text = qbm_core::ising::ModelFile::from_machine(&bm).to_json()?;
        run.write_bytes(&model, (text + "\n").as_bytes())?;
        run.write_bytes(&trace_name, &trace_csv(&trace)?)?;
        let final_loss = trace.final_loss();
        if let Some(l) = final_loss {
            if best.as_ref().is_none_or(|(_, b, _)| l < *b) {
                best = Some((seed, l, bm));
            }
        }
        runs.push(RunSummary {
            seed,
            initial_loss: trace.initial_loss,
            final_loss,
            steps: trace.steps(),
            converged: trace.converged,
            model,
            trace: trace_name,
        });
    }

    if let Some((_, _, bm)) = &best {
        let text = qbm_core::ising::ModelFile::from_machine(bm).to_json()?;
        run.write_bytes("best_model.json", (text + "\n").as_bytes())?;
    }
    let summary = TrainSummary {
        mode: args.mode,
        arch: arch.to_string(),
        beta: base.sampler.beta,
        loss: match args.mode {
            Mode::Distribution => "dkl",
            Mode::Function => "ncll",
        },
        runs,
        best_seed: best.as_ref().map(|b| b.0),
        best_loss: best.as_ref().map(|b| b.1),
    };
    run.write_json("summary.json", &summary)?;
    run.finish("train", args)?;
    Ok(summary)
}
