//! Exact and empirical distributions, divergences and temperature analysis.

mod beta;
pub mod propositions;
mod sweep;

use std::collections::HashMap;

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::ising::{clamp_visible, state_bit, BoltzmannMachine, EnergyTable, SpinState};
use crate::samplers::SampleSet;

pub use beta::{fit_beta, golden_section_min, BetaFit, BetaGrid};
pub use sweep::{dkl_optimum, sweep_beta, BetaSweep, SweepRow};

/// Probability table over a set of (projected) configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    support: Vec<Vec<i8>>,
    probs: Vec<f64>,
    index: HashMap<Vec<i8>, usize>,
}

impl Distribution {
    pub fn new(support: Vec<Vec<i8>>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::invalid("support and probabilities differ in length"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::invalid(format!("probability {p} is not a finite nonnegative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        let mut index = HashMap::with_capacity(support.len());
        for (i, s) in support.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::invalid(format!("support entry {s:?} repeated")));
            }
        }
        Ok(Distribution { support, probs, index })
    }

    /// Normalises nonnegative weights into a distribution.
    pub fn from_weights(support: Vec<Vec<i8>>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        Self::new(support, weights.into_iter().map(|w| w / total).collect())
    }

    /// Target distribution `q` of a dataset.
    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self::new(dataset.rows().to_vec(), dataset.weights().to_vec())
            .expect("datasets are normalised and duplicate free")
    }

    pub fn support(&self) -> &[Vec<i8>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of a configuration; zero when outside the support.
    pub fn prob(&self, state: &[i8]) -> f64 {
        self.index.get(state).map_or(0.0, |&i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i8], f64)> {
        self.support.iter().map(Vec::as_slice).zip(self.probs.iter().copied())
    }
}

/// Sums a full probability table (indexed over `n` nodes) onto `projection`.
/// The result is indexed lexicographically over the projected nodes.
pub(crate) fn project_table(probs: &[f64], n: usize, projection: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << projection.len()];
    let contiguous_prefix = projection.iter().enumerate().all(|(i, &p)| i == p);
    if contiguous_prefix {
        let shift = n - projection.len();
        for (k, p) in probs.iter().enumerate() {
            out[k >> shift] += p;
        }
    } else {
        for (k, p) in probs.iter().enumerate() {
            let idx = projection
                .iter()
                .fold(0usize, |acc, &node| (acc << 1) | usize::from(state_bit(k as u64, node, n)));
            out[idx] += p;
        }
    }
    out
}

fn lexicographic_support(len: usize, basis: crate::ising::Basis) -> Vec<Vec<i8>> {
    (0..1u64 << len).map(|k| SpinState::from_index(k, len, basis).into_values()).collect()
}

/// Exact marginal `p(x_projection) = sum_rest exp(-beta E) / Z` over every
/// configuration of the projected nodes.
pub fn model_probability(bm: &BoltzmannMachine, beta: f64, projection: &[usize]) -> Result<Distribution> {
    if let Some(&bad) = projection.iter().find(|&&i| i >= bm.num_nodes()) {
        return Err(Error::invalid(format!("projection node {bad} out of range")));
    }
    let table = EnergyTable::build(bm)?;
    let probs = project_table(&table.probabilities(beta), bm.num_nodes(), projection);
    Distribution::new(lexicographic_support(projection.len(), bm.basis()), probs)
}

/// Marginal over the visible block.
pub fn visible_probability(bm: &BoltzmannMachine, beta: f64) -> Result<Distribution> {
    let visible: Vec<usize> = bm.visible_nodes().collect();
    model_probability(bm, beta, &visible)
}

/// `D_KL(q || p) = sum_q q ln(q / p)`. Returns `+inf` when `p` vanishes
/// somewhere on the support of `q`.
pub fn kl_divergence(q: &Distribution, p: &Distribution) -> f64 {
    let mut d = 0.0;
    for (state, qv) in q.iter() {
        if qv == 0.0 {
            continue;
        }
        let pv = p.prob(state);
        if pv <= 0.0 {
            return f64::INFINITY;
        }
        d += qv * (qv / pv).ln();
    }
    d.max(0.0)
}

/// `(1/2) sqrt(sum_i (sqrt(a_i) - sqrt(b_i))^2)` over the union of supports.
pub fn hellinger(a: &Distribution, b: &Distribution) -> f64 {
    let mut sum = 0.0;
    for (state, pa) in a.iter() {
        let d = pa.sqrt() - b.prob(state).sqrt();
        sum += d * d;
    }
    for (state, pb) in b.iter() {
        if !a.index.contains_key(state) {
            sum += pb;
        }
    }
    0.5 * sum.sqrt()
}

/// Hellinger distance between two tables over the same index space.
pub(crate) fn hellinger_tables(a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum();
    0.5 * sum.sqrt()
}

/// Exact `p(v_out | v_in)` over all output configurations, computed on the
/// machine with its inputs clamped.
pub fn conditional_probability(bm: &BoltzmannMachine, beta: f64, inputs: &[i8]) -> Result<Distribution> {
    if bm.num_output() == 0 {
        return Err(Error::invalid("machine has no output nodes"));
    }
    if inputs.len() != bm.num_input() {
        return Err(Error::invalid(format!(
            "expected {} input values, got {}",
            bm.num_input(),
            inputs.len()
        )));
    }
    let clamped = clamp_visible(bm, inputs)?;
    let reduced = &clamped.machine;
    let table = EnergyTable::build(reduced)?;
    let outputs: Vec<usize> = (0..bm.num_output()).collect();
    let probs = project_table(&table.probabilities(beta), reduced.num_nodes(), &outputs);
    Distribution::new(lexicographic_support(outputs.len(), bm.basis()), probs)
}

pub(crate) fn require_split(bm: &BoltzmannMachine, dataset: &Dataset) -> Result<(usize, usize)> {
    let split = dataset.io_split().ok_or(Error::MissingSplit)?;
    if split != (bm.num_input(), bm.num_output()) {
        return Err(Error::invalid(format!(
            "dataset split {split:?} does not match machine ({}, {})",
            bm.num_input(),
            bm.num_output()
        )));
    }
    Ok(split)
}

/// `p(correct output | input)` for every dataset row, in row order.
pub fn row_conditionals(bm: &BoltzmannMachine, beta: f64, dataset: &Dataset) -> Result<Vec<f64>> {
    require_split(bm, dataset)?;
    dataset
        .io_rows()?
        .into_iter()
        .map(|(inp, out)| {
            let c = conditional_probability(bm, beta, &in_basis(inp, bm.basis()))?;
            Ok(c.prob(&in_basis(out, bm.basis())))
        })
        .collect()
}

/// Maps dataset bits onto the machine's spin values.
pub(crate) fn in_basis(bits: &[i8], basis: crate::ising::Basis) -> Vec<i8> {
    bits.iter().map(|&b| basis.value(b == 1)).collect()
}

/// `L = -sum_rows ln p(v_out | v_in)`.
pub fn negative_conditional_log_likelihood(bm: &BoltzmannMachine, beta: f64, dataset: &Dataset) -> Result<f64> {
    Ok(row_conditionals(bm, beta, dataset)?.into_iter().map(|p| -p.ln()).sum())
}

pub(crate) fn check_visible_width(bm: &BoltzmannMachine, dataset: &Dataset) -> Result<()> {
    if dataset.width() != bm.num_visible() {
        return Err(Error::invalid(format!(
            "dataset rows have {} bits, machine has {} visible nodes",
            dataset.width(),
            bm.num_visible()
        )));
    }
    Ok(())
}

/// `D_KL(q || p_beta)` of the machine's visible marginal against a dataset.
pub fn dataset_kl(bm: &BoltzmannMachine, beta: f64, dataset: &Dataset) -> Result<f64> {
    check_visible_width(bm, dataset)?;
    let p = visible_probability(bm, beta)?;
    let q = Distribution::new(
        dataset.rows().iter().map(|r| in_basis(r, bm.basis())).collect(),
        dataset.weights().to_vec(),
    )?;
    Ok(kl_divergence(&q, &p))
}

/// First and second derivatives of `D_KL(q || p_beta)` with respect to beta:
///
/// - `d/dbeta  = sum_v q(v) E[E | v] - E[E]`
/// - `d2/dbeta2 = sum_v q(v) (Var(E) - Var(E | v))`
pub fn dkl_beta_derivatives(bm: &BoltzmannMachine, beta: f64, dataset: &Dataset) -> Result<(f64, f64)> {
    check_visible_width(bm, dataset)?;
    let table = EnergyTable::build(bm)?;
    Ok(dkl_beta_derivatives_from_table(&table, bm.num_hidden(), beta, dataset))
}

pub(crate) fn dkl_beta_derivatives_from_table(
    table: &EnergyTable,
    num_hidden: usize,
    beta: f64,
    dataset: &Dataset,
) -> (f64, f64) {
    let probs = table.probabilities(beta);
    let energies = table.energies();
    let (mean, var) = moments(energies, &probs);
    let block = 1usize << num_hidden;
    let mut first = -mean;
    let mut second = 0.0;
    for (row, q) in dataset.iter() {
        let v = row.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        let range = v * block..(v + 1) * block;
        let mass: f64 = probs[range.clone()].iter().sum();
        let cond: Vec<f64> = probs[range.clone()].iter().map(|p| p / mass).collect();
        let (cmean, cvar) = moments(&energies[range], &cond);
        first += q * cmean;
        second += q * (var - cvar);
    }
    (first, second)
}

fn moments(values: &[f64], probs: &[f64]) -> (f64, f64) {
    let mean: f64 = values.iter().zip(probs).map(|(e, p)| e * p).sum();
    let var: f64 = values.iter().zip(probs).map(|(e, p)| p * (e - mean).powi(2)).sum();
    (mean, var)
}

/// Mean energy `E[E]` under the Boltzmann distribution.
pub fn mean_energy(bm: &BoltzmannMachine, beta: f64) -> Result<f64> {
    let table = EnergyTable::build(bm)?;
    Ok(moments(table.energies(), &table.probabilities(beta)).0)
}

/// Total ground-state probability `|G| exp(-beta E_min) / Z` per grid point.
pub fn ground_state_probability_curve(bm: &BoltzmannMachine, betas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let table = EnergyTable::build(bm)?;
    let ground = table.ground_indices();
    Ok(betas
        .iter()
        .map(|&b| {
            let probs = table.probabilities(b);
            (b, ground.iter().map(|&k| probs[k as usize]).sum())
        })
        .collect())
}

/// Normalised frequencies of the projected sample states.
pub fn empirical_distribution(samples: &SampleSet, projection: &[usize]) -> Result<Distribution> {
    crate::samplers::empirical_distribution(samples, projection)
}
