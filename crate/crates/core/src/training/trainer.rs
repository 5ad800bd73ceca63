use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::ising::{Basis, Bounds, BoltzmannMachine, ENUMERATION_CAP};
use crate::metrics::{dataset_kl, negative_conditional_log_likelihood};
use crate::samplers::{sampler_for, Sampler};

use super::gradient::{derive_seed, exact_grad_dkl, exact_grad_ncll, sampled_grad_dkl, sampled_grad_ncll};
use super::{momentum_update, GradientEstimate, GradientMode, Init, TraceRecord, TrainingConfig, TrainingTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    /// Every pair of nodes coupled.
    #[default]
    Complete,
    /// Visible-hidden couplings only.
    Bipartite,
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Connectivity::Complete),
            "bipartite" => Ok(Connectivity::Bipartite),
            other => Err(Error::invalid(format!("unknown connectivity `{other}`"))),
        }
    }
}

/// Node counts and connectivity of a machine to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub num_input: usize,
    pub num_output: usize,
    pub num_hidden: usize,
    #[serde(default)]
    pub connectivity: Connectivity,
}

impl Architecture {
    pub fn new(num_input: usize, num_output: usize, num_hidden: usize) -> Self {
        Architecture { num_input, num_output, num_hidden, connectivity: Connectivity::Complete }
    }

    pub fn num_visible(&self) -> usize {
        self.num_input + self.num_output
    }

    pub fn build(&self, basis: Basis) -> BoltzmannMachine {
        match self.connectivity {
            Connectivity::Complete => BoltzmannMachine::complete(self.num_input, self.num_output, self.num_hidden, basis),
            Connectivity::Bipartite => {
                BoltzmannMachine::bipartite(self.num_input, self.num_output, self.num_hidden, basis)
            }
        }
    }
}

/// `3v1h` (visible and hidden counts) or `2i1o1h` (input, output, hidden).
impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("architecture `{s}` is not like 3v1h or 2i1o1h"));
        let mut counts = std::collections::BTreeMap::new();
        let mut digits = String::new();
        for c in s.trim().chars() {
            if c.is_ascii_digit() {
                digits.push(c);
            } else {
                let n: usize = digits.parse().map_err(|_| bad())?;
                if counts.insert(c, n).is_some() {
                    return Err(bad());
                }
                digits.clear();
            }
        }
        if !digits.is_empty() {
            return Err(bad());
        }
        let get = |c| counts.get(&c).copied().unwrap_or(0);
        if counts.keys().any(|c| !"viho".contains(*c)) || (counts.contains_key(&'v') && (get('i') + get('o')) > 0) {
            return Err(bad());
        }
        let arch = if counts.contains_key(&'v') {
            Architecture::new(get('v'), 0, get('h'))
        } else {
            Architecture::new(get('i'), get('o'), get('h'))
        };
        if arch.num_visible() == 0 {
            return Err(bad());
        }
        Ok(arch)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num_output == 0 {
            write!(f, "{}v{}h", self.num_input, self.num_hidden)
        } else {
            write!(f, "{}i{}o{}h", self.num_input, self.num_output, self.num_hidden)
        }
    }
}

/// Initial machine. A visible-only architecture adopts the dataset's
/// input/output split when it has one.
pub fn initial_machine(dataset: &Dataset, arch: &Architecture, cfg: &TrainingConfig) -> Result<BoltzmannMachine> {
    let mut arch = *arch;
    if arch.num_output == 0 {
        if let Some((i, o)) = dataset.io_split() {
            if i + o == arch.num_input {
                arch.num_input = i;
                arch.num_output = o;
            }
        }
    }
    if arch.num_visible() != dataset.width() {
        return Err(Error::invalid(format!(
            "architecture {arch} has {} visible nodes, dataset rows have {}",
            arch.num_visible(),
            dataset.width()
        )));
    }
    let bounds = Bounds { h_max: cfg.h_max, j_max: cfg.j_max, enforce: true };
    match &cfg.init {
        Init::UniformRandom { range } => {
            let mut bm = arch.build(Basis::ZeroOne).with_bounds(bounds)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let params: Vec<f64> = bm
                .parameter_classes()
                .iter()
                .map(|c| {
                    let x = if *range > 0.0 { rng.gen_range(-range..=*range) } else { 0.0 };
                    let b = match c {
                        crate::ising::ParamClass::Bias(_) => cfg.h_max,
                        crate::ising::ParamClass::Coupling(..) => cfg.j_max,
                    };
                    x.clamp(-b, b)
                })
                .collect();
            bm.set_parameters(&params)?;
            Ok(bm)
        }
        Init::FromFile { path } => {
            let bm = BoltzmannMachine::load(path)?;
            if bm.num_visible() != dataset.width() {
                return Err(Error::invalid(format!(
                    "initial model has {} visible nodes, dataset rows have {}",
                    bm.num_visible(),
                    dataset.width()
                )));
            }
            bm.with_bounds(bounds)
        }
    }
}

fn run(
    mut bm: BoltzmannMachine,
    cfg: &TrainingConfig,
    mut gradient: impl FnMut(&BoltzmannMachine, u64) -> Result<GradientEstimate>,
    loss: impl Fn(&BoltzmannMachine) -> Result<f64>,
) -> Result<(BoltzmannMachine, TrainingTrace)> {
    let start = Instant::now();
    let can_score = bm.num_nodes() <= ENUMERATION_CAP;
    let classes = bm.parameter_classes();
    let mut trace = TrainingTrace {
        initial_loss: if can_score { Some(loss(&bm)?) } else { None },
        ..Default::default()
    };
    let mut prev_delta = vec![0.0; bm.num_parameters()];
    for step in 1..=cfg.max_steps {
        let grad = gradient(&bm, step as u64)?;
        if !grad.is_finite() {
            return Err(Error::invalid(format!("non-finite gradient at step {step}")));
        }
        let theta = bm.parameters();
        let (next, delta) = momentum_update(&theta, &grad.to_vector(), &prev_delta, &classes, cfg);
        let delta_inf = theta.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        bm.set_parameters(&next)?;
        prev_delta = delta;

        let done = delta_inf <= cfg.delta_theta_min;
        let record_loss = can_score && (step % cfg.loss_every == 0 || done || step == cfg.max_steps);
        trace.push(TraceRecord {
            step,
            loss: if record_loss { Some(loss(&bm)?) } else { None },
            delta_inf,
            seconds: start.elapsed().as_secs_f64(),
            parameters: cfg.record_parameters.then(|| next.clone()),
        });
        if done {
            trace.converged = true;
            break;
        }
    }
    Ok((bm, trace))
}

/// Distribution matching: minimises `D_KL(q || p_beta)` over the visible
/// marginal. Exact mode trains at `cfg.sampler.beta`.
pub fn train_distribution(
    dataset: &Dataset,
    arch: &Architecture,
    cfg: &TrainingConfig,
) -> Result<(BoltzmannMachine, TrainingTrace)> {
    let mut sampler = sampler_for(&cfg.sampler)?;
    train_distribution_with(dataset, arch, cfg, sampler.as_mut())
}

/// As [`train_distribution`], drawing Sampled-mode expectations from `sampler`.
pub fn train_distribution_with(
    dataset: &Dataset,
    arch: &Architecture,
    cfg: &TrainingConfig,
    sampler: &mut dyn Sampler,
) -> Result<(BoltzmannMachine, TrainingTrace)> {
    cfg.validate()?;
    let bm = initial_machine(dataset, arch, cfg)?;
    let beta = cfg.sampler.beta;
    let resampling = cfg.resampling();
    let base_seed = cfg.sampler.seed.wrapping_add(cfg.seed);
    run(
        bm,
        cfg,
        |bm, step| match cfg.gradient_mode {
            GradientMode::Exact => exact_grad_dkl(bm, dataset, beta),
            GradientMode::Sampled => {
                let s = cfg.sampler.with_seed(derive_seed(base_seed, step));
                sampled_grad_dkl(bm, dataset, sampler, &s, resampling)
            }
        },
        |bm| dataset_kl(bm, beta, dataset),
    )
}

/// Function approximation: minimises `-sum ln p(v_out | v_in)`. The dataset
/// must carry an input/output split matching the architecture.
pub fn train_function_approximator(
    dataset: &Dataset,
    arch: &Architecture,
    cfg: &TrainingConfig,
) -> Result<(BoltzmannMachine, TrainingTrace)> {
    let mut sampler = sampler_for(&cfg.sampler)?;
    train_function_approximator_with(dataset, arch, cfg, sampler.as_mut())
}

pub fn train_function_approximator_with(
    dataset: &Dataset,
    arch: &Architecture,
    cfg: &TrainingConfig,
    sampler: &mut dyn Sampler,
) -> Result<(BoltzmannMachine, TrainingTrace)> {
    cfg.validate()?;
    dataset.io_split().ok_or(Error::MissingSplit)?;
    let bm = initial_machine(dataset, arch, cfg)?;
    let beta = cfg.sampler.beta;
    let base_seed = cfg.sampler.seed.wrapping_add(cfg.seed);
    run(
        bm,
        cfg,
        |bm, step| match cfg.gradient_mode {
            GradientMode::Exact => exact_grad_ncll(bm, dataset, beta),
            GradientMode::Sampled => {
                let s = cfg.sampler.with_seed(derive_seed(base_seed, step));
                sampled_grad_ncll(bm, dataset, sampler, &s)
            }
        },
        |bm| negative_conditional_log_likelihood(bm, beta, dataset),
    )
}
