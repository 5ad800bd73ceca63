use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ising::{BoltzmannMachine, SpinState};

use super::{SampleSet, Sampler, SamplerConfig};

/// Single-site heat-bath sampling with a fixed sequential sweep order.
///
/// Site `k` takes its "on" value with probability `sigmoid(-beta dE_k)`, where
/// `dE_k` is the energy change from its "off" to its "on" value given the
/// current neighbours. `burn_in` sweeps are discarded, then one state is kept
/// every `thinning` sweeps.
pub fn gibbs_sample(bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet> {
    cfg.validate()?;
    let n = bm.num_nodes();
    let basis = bm.basis();
    let (on, off) = (basis.value(true), basis.value(false));
    let adjacency = bm.adjacency();
    let biases = bm.biases();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<i8> = (0..n).map(|_| basis.value(rng.gen())).collect();

    let sweep = |x: &mut Vec<i8>, rng: &mut ChaCha8Rng| {
        for k in 0..n {
            let field = biases[k] + adjacency[k].iter().map(|&(l, j)| j * f64::from(x[l])).sum::<f64>();
            let de = f64::from(on - off) * field;
            let p_on = 1.0 / (1.0 + (cfg.beta * de).exp());
            x[k] = if rng.gen::<f64>() < p_on { on } else { off };
        }
    };

    for _ in 0..cfg.burn_in {
        sweep(&mut x, &mut rng);
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..cfg.num_reads {
        for _ in 0..cfg.thinning {
            sweep(&mut x, &mut rng);
        }
        let index = x.iter().fold(0u64, |acc, &v| (acc << 1) | u64::from(v == on));
        *counts.entry(index).or_default() += 1;
    }
    let states = counts.keys().map(|&k| SpinState::from_index(k, n, basis)).collect();
    SampleSet::from_counts(n, basis, states, counts.into_values().collect(), cfg.beta, "gibbs")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GibbsSampler;

impl Sampler for GibbsSampler {
    fn sample(&mut self, bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet> {
        gibbs_sample(bm, cfg)
    }

    fn id(&self) -> &str {
        "gibbs"
    }
}
