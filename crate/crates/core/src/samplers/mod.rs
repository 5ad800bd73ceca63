//! Boltzmann samplers: exact enumeration, Gibbs heat-bath sweeps, and an
//! HTTP client for remote annealer-style services (plus a local mock).

mod exact;
mod gibbs;
pub mod mock;
mod remote;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{Basis, BoltzmannMachine, SpinState};
use crate::metrics::Distribution;

pub use exact::{exact_sample, ExactSampler};
pub use gibbs::{gibbs_sample, GibbsSampler};
pub use remote::{remote_sample, RemoteSampler, ENDPOINT_ENV};

/// Per-state tally of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub enum Tally {
    Counts(Vec<u64>),
    /// Exact probabilities (exhaustive oracle mode).
    Weights(Vec<f64>),
}

/// Distinct sampled configurations, sorted by state index, with counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    node_count: usize,
    basis: Basis,
    states: Vec<SpinState>,
    tally: Tally,
    beta: f64,
    num_reads: u64,
    backend_id: String,
}

impl SampleSet {
    /// Builds a counted sample set; repeated states are merged.
    pub fn from_counts(
        node_count: usize,
        basis: Basis,
        states: Vec<SpinState>,
        counts: Vec<u64>,
        beta: f64,
        backend_id: impl Into<String>,
    ) -> Result<Self> {
        if states.len() != counts.len() {
            return Err(Error::invalid("states and counts differ in length"));
        }
        if counts.contains(&0) {
            return Err(Error::invalid("counts must be positive"));
        }
        let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
        for (s, c) in states.iter().zip(&counts) {
            check_state(s, node_count, basis)?;
            *merged.entry(s.index()).or_default() += c;
        }
        let num_reads = merged.values().sum();
        Ok(SampleSet {
            node_count,
            basis,
            states: merged.keys().map(|&k| SpinState::from_index(k, node_count, basis)).collect(),
            tally: Tally::Counts(merged.into_values().collect()),
            beta,
            num_reads,
            backend_id: backend_id.into(),
        })
    }

    /// Builds a weighted sample set; weights are normalised. `num_reads` is the
    /// number of states.
    pub fn from_weights(
        node_count: usize,
        basis: Basis,
        states: Vec<SpinState>,
        weights: Vec<f64>,
        beta: f64,
        backend_id: impl Into<String>,
    ) -> Result<Self> {
        if states.len() != weights.len() {
            return Err(Error::invalid("states and weights differ in length"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
        for (s, w) in states.iter().zip(&weights) {
            check_state(s, node_count, basis)?;
            *merged.entry(s.index()).or_default() += w;
        }
        let total: f64 = merged.values().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        Ok(SampleSet {
            node_count,
            basis,
            states: merged.keys().map(|&k| SpinState::from_index(k, node_count, basis)).collect(),
            num_reads: merged.len() as u64,
            tally: Tally::Weights(merged.into_values().map(|w| w / total).collect()),
            beta,
            backend_id: backend_id.into(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn states(&self) -> &[SpinState] {
        &self.states
    }

    pub fn tally(&self) -> &Tally {
        &self.tally
    }

    pub fn counts(&self) -> Option<&[u64]> {
        match &self.tally {
            Tally::Counts(c) => Some(c),
            Tally::Weights(_) => None,
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        matches!(self.tally, Tally::Weights(_))
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_reads(&self) -> u64 {
        self.num_reads
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    /// Number of distinct states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Each distinct state with its relative frequency.
    pub fn iter_frequencies(&self) -> impl Iterator<Item = (&SpinState, f64)> + '_ {
        let freqs: Vec<f64> = match &self.tally {
            Tally::Counts(c) => c.iter().map(|&n| n as f64 / self.num_reads as f64).collect(),
            Tally::Weights(w) => w.clone(),
        };
        self.states.iter().zip(freqs)
    }

    /// Sum of counts from both sets. Both must be counted, on the same node
    /// set and basis, at the same beta.
    pub fn merge(&self, other: &SampleSet) -> Result<SampleSet> {
        let (Tally::Counts(a), Tally::Counts(b)) = (&self.tally, &other.tally) else {
            return Err(Error::invalid("only counted sample sets can be merged"));
        };
        if self.node_count != other.node_count || self.basis != other.basis {
            return Err(Error::invalid("sample sets cover different node sets"));
        }
        if self.beta != other.beta {
            return Err(Error::invalid("sample sets were drawn at different beta"));
        }
        let states = self.states.iter().chain(&other.states).cloned().collect();
        let counts = a.iter().chain(b).copied().collect();
        let id = if self.backend_id == other.backend_id {
            self.backend_id.clone()
        } else {
            format!("{}+{}", self.backend_id, other.backend_id)
        };
        SampleSet::from_counts(self.node_count, self.basis, states, counts, self.beta, id)
    }

    pub fn to_file(&self) -> SampleSetFile {
        let (counts, weights) = match &self.tally {
            Tally::Counts(c) => (Some(c.clone()), None),
            Tally::Weights(w) => (None, Some(w.clone())),
        };
        SampleSetFile {
            beta: self.beta,
            num_reads: self.num_reads,
            basis: self.basis,
            node_count: Some(self.node_count),
            backend_id: Some(self.backend_id.clone()),
            states: self.states.iter().map(|s| s.values().to_vec()).collect(),
            counts,
            weights,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<SampleSetFile>(text)?.into_sample_set()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn check_state(s: &SpinState, node_count: usize, basis: Basis) -> Result<()> {
    if s.len() != node_count || s.basis() != basis {
        return Err(Error::invalid(format!(
            "state of {} {} values in a set of {node_count} {basis} nodes",
            s.len(),
            s.basis()
        )));
    }
    Ok(())
}

/// On-disk sample set: `{beta, num_reads, states, counts}` or, for exhaustive
/// sets, `weights` in place of `counts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSetFile {
    pub beta: f64,
    pub num_reads: u64,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_id: Option<String>,
    pub states: Vec<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl SampleSetFile {
    pub fn into_sample_set(self) -> Result<SampleSet> {
        let n = match (self.node_count, self.states.first()) {
            (Some(n), _) => n,
            (None, Some(s)) => s.len(),
            (None, None) => return Err(Error::invalid("sample file has no states")),
        };
        let states = self
            .states
            .into_iter()
            .map(|v| SpinState::new(v, self.basis))
            .collect::<Result<Vec<_>>>()?;
        let id = self.backend_id.unwrap_or_else(|| "file".into());
        let set = match (self.counts, self.weights) {
            (Some(c), None) => SampleSet::from_counts(n, self.basis, states, c, self.beta, id)?,
            (None, Some(w)) => SampleSet::from_weights(n, self.basis, states, w, self.beta, id)?,
            _ => return Err(Error::invalid("sample file needs exactly one of counts or weights")),
        };
        if set.counts().is_some() && set.num_reads != self.num_reads {
            return Err(Error::invalid(format!(
                "num_reads {} does not equal the count total {}",
                self.num_reads, set.num_reads
            )));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Exact,
    Gibbs,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Backend::Exact),
            "gibbs" => Ok(Backend::Gibbs),
            "remote" => Ok(Backend::Remote),
            other => Err(Error::invalid(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub beta: f64,
    pub num_reads: u64,
    /// Gibbs sweeps discarded before the first kept state.
    pub burn_in: u64,
    /// Sweeps between kept Gibbs states.
    pub thinning: u64,
    pub seed: u64,
    pub backend: Backend,
    /// Exact backend only: return every state with its probability.
    pub exhaustive: bool,
    /// Remote backend URL; falls back to the `QBM_ENDPOINT` variable.
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            beta: 1.0,
            num_reads: 1000,
            burn_in: 1000,
            thinning: 10,
            seed: 0,
            backend: Backend::Exact,
            exhaustive: false,
            endpoint: None,
            timeout_secs: 30.0,
        }
    }
}

impl SamplerConfig {
    pub fn new(beta: f64, num_reads: u64, seed: u64) -> Self {
        SamplerConfig { beta, num_reads, seed, ..Default::default() }
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SamplerConfig { seed, ..self.clone() }
    }

    /// Beta must be finite and nonnegative (zero gives the uniform
    /// distribution); at least one read.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid(format!("beta {} must be finite and nonnegative", self.beta)));
        }
        if self.num_reads == 0 {
            return Err(Error::invalid("num_reads must be at least 1"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be at least 1"));
        }
        Ok(())
    }
}

/// A source of Boltzmann-distributed samples.
pub trait Sampler {
    fn sample(&mut self, bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet>;

    fn id(&self) -> &str;
}

/// Sampler selected by `cfg.backend`.
pub fn sampler_for(cfg: &SamplerConfig) -> Result<Box<dyn Sampler>> {
    Ok(match cfg.backend {
        Backend::Exact => Box::new(ExactSampler),
        Backend::Gibbs => Box::new(GibbsSampler),
        Backend::Remote => Box::new(RemoteSampler::resolve(cfg.endpoint.as_deref())?),
    })
}

/// Normalised frequencies of the projected states; unseen states are absent
/// (probability zero).
pub fn empirical_distribution(samples: &SampleSet, projection: &[usize]) -> Result<Distribution> {
    if let Some(&bad) = projection.iter().find(|&&i| i >= samples.node_count()) {
        return Err(Error::invalid(format!("projection node {bad} out of range")));
    }
    let mut acc: HashMap<Vec<i8>, f64> = HashMap::new();
    for (state, f) in samples.iter_frequencies() {
        *acc.entry(state.project(projection)).or_default() += f;
    }
    let mut entries: Vec<(Vec<i8>, f64)> = acc.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let (support, weights) = entries.into_iter().unzip();
    Distribution::from_weights(support, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: &[i8]) -> SpinState {
        SpinState::new(v.to_vec(), Basis::ZeroOne).unwrap()
    }

    #[test]
    fn counts_are_merged_and_sorted() {
        let ss = SampleSet::from_counts(2, Basis::ZeroOne, vec![st(&[1, 0]), st(&[0, 1]), st(&[1, 0])], vec![2, 1, 3], 1.0, "t")
            .unwrap();
        assert_eq!(ss.len(), 2);
        assert_eq!(ss.states()[0].values(), &[0, 1]);
        assert_eq!(ss.counts().unwrap(), &[1, 5]);
        assert_eq!(ss.num_reads(), 6);
        assert!(SampleSet::from_counts(2, Basis::ZeroOne, vec![st(&[1, 0])], vec![0], 1.0, "t").is_err());
        assert!(SampleSet::from_counts(3, Basis::ZeroOne, vec![st(&[1, 0])], vec![1], 1.0, "t").is_err());
    }

    #[test]
    fn empirical_examples() {
        let one = SampleSet::from_counts(2, Basis::ZeroOne, vec![st(&[1, 1])], vec![10], 1.0, "t").unwrap();
        assert_eq!(empirical_distribution(&one, &[0, 1]).unwrap().prob(&[1, 1]), 1.0);
        let two = SampleSet::from_counts(2, Basis::ZeroOne, vec![st(&[0, 1]), st(&[1, 1])], vec![3, 1], 1.0, "t").unwrap();
        let d = empirical_distribution(&two, &[0]).unwrap();
        assert_eq!(d.prob(&[0]), 0.75);
        assert_eq!(d.prob(&[1]), 0.25);
        assert_eq!(empirical_distribution(&two, &[1]).unwrap().prob(&[1]), 1.0);
        assert!(empirical_distribution(&two, &[2]).is_err());
    }

    #[test]
    fn merge_sums_counts() {
        let a = SampleSet::from_counts(1, Basis::ZeroOne, vec![st(&[0])], vec![2], 1.0, "x").unwrap();
        let b = SampleSet::from_counts(1, Basis::ZeroOne, vec![st(&[1]), st(&[0])], vec![1, 1], 1.0, "x").unwrap();
        let ab = a.merge(&b).unwrap();
        assert_eq!(ab, b.merge(&a).unwrap());
        assert_eq!(ab.counts().unwrap(), &[3, 1]);
        let hot = SampleSet::from_counts(1, Basis::ZeroOne, vec![st(&[0])], vec![2], 2.0, "x").unwrap();
        assert!(a.merge(&hot).is_err());
    }

    #[test]
    fn file_round_trip() {
        let ss = SampleSet::from_counts(2, Basis::ZeroOne, vec![st(&[0, 1]), st(&[1, 1])], vec![3, 1], 2.5, "gibbs").unwrap();
        assert_eq!(SampleSet::from_json(&ss.to_json().unwrap()).unwrap(), ss);
        let minimal = r#"{"beta": 1.0, "num_reads": 4, "states": [[0,1],[1,1]], "counts": [3,1]}"#;
        let parsed = SampleSet::from_json(minimal).unwrap();
        assert_eq!(parsed.num_reads(), 4);
        let wrong_total = r#"{"beta": 1.0, "num_reads": 5, "states": [[0,1]], "counts": [3]}"#;
        assert!(SampleSet::from_json(wrong_total).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        assert!(SamplerConfig::new(-1.0, 10, 0).validate().is_err());
        assert!(SamplerConfig::new(1.0, 0, 0).validate().is_err());
        assert_eq!("Gibbs".parse::<Backend>().unwrap(), Backend::Gibbs);
    }
}
