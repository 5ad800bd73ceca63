use std::collections::BTreeMap;

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ising::{BoltzmannMachine, EnergyTable, SpinState};

use super::{SampleSet, Sampler, SamplerConfig};

/// I.i.d. draws from the enumerated Boltzmann table, or the table itself
/// when `cfg.exhaustive` is set.
pub fn exact_sample(bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let n = bm.num_nodes();
    let table = EnergyTable::build(bm)?;
    let probs = table.probabilities(cfg.beta);

    if cfg.exhaustive {
        let states = (0..probs.len() as u64).map(|k| SpinState::from_index(k, n, bm.basis())).collect();
        return SampleSet::from_weights(n, bm.basis(), states, probs, cfg.beta, "exact-exhaustive");
    }

    let dist = WeightedIndex::new(&probs).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..cfg.num_reads {
        *counts.entry(dist.sample(&mut rng) as u64).or_default() += 1;
    }
    let states = counts.keys().map(|&k| SpinState::from_index(k, n, bm.basis())).collect();
    SampleSet::from_counts(n, bm.basis(), states, counts.into_values().collect(), cfg.beta, "exact")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSampler;

impl Sampler for ExactSampler {
    fn sample(&mut self, bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet> {
        exact_sample(bm, cfg)
    }

    fn id(&self) -> &str {
        "exact"
    }
}
