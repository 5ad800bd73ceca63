use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::ising::{clamp, state_bit, Bounds, BoltzmannMachine, ClampedMachine, EnergyTable, SpinState};
use crate::metrics::{check_visible_width, in_basis, require_split};
use crate::samplers::{sampler_for, Sampler, SamplerConfig};

/// Partial derivatives of a loss, one per bias and one per coupling (in the
/// machine's coupling-key order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub d_bias: Vec<f64>,
    pub d_coupling: Vec<f64>,
    pub keys: Vec<(usize, usize)>,
}

impl GradientEstimate {
    pub fn zeros(bm: &BoltzmannMachine) -> Self {
        GradientEstimate {
            d_bias: vec![0.0; bm.num_nodes()],
            d_coupling: vec![0.0; bm.num_couplings()],
            keys: bm.coupling_keys(),
        }
    }

    /// Splits a vector laid out like [`BoltzmannMachine::parameters`].
    pub fn from_vector(bm: &BoltzmannMachine, v: &[f64]) -> Result<Self> {
        if v.len() != bm.num_parameters() {
            return Err(Error::invalid(format!(
                "expected {} partials, got {}",
                bm.num_parameters(),
                v.len()
            )));
        }
        let n = bm.num_nodes();
        Ok(GradientEstimate { d_bias: v[..n].to_vec(), d_coupling: v[n..].to_vec(), keys: bm.coupling_keys() })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        self.d_bias.iter().chain(&self.d_coupling).copied().collect()
    }

    pub fn coupling(&self, k: usize, l: usize) -> Option<f64> {
        let key = (k.min(l), k.max(l));
        self.keys.iter().position(|&x| x == key).map(|i| self.d_coupling[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vector().iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn linf_distance(&self, other: &GradientEstimate) -> f64 {
        self.to_vector().iter().zip(other.to_vector()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// Expectations by enumeration.
    #[default]
    Exact,
    /// Expectations from sampler draws.
    Sampled,
}

/// When the data phase of the distribution gradient draws fresh clamped samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    /// One clamped call for every data row.
    Always,
    /// Reuse model-phase samples whose visible part equals the row; call the
    /// sampler only for rows the model phase never produced.
    WhenUnseen,
}

/// Running sum of `p * dE/dtheta` over full configurations:
/// `dE/dbias_i = s_i`, `dE/dJ_kl = s_k s_l`.
struct Stats {
    n: usize,
    keys: Vec<(usize, usize)>,
    acc: Vec<f64>,
}

impl Stats {
    fn new(bm: &BoltzmannMachine) -> Self {
        Stats { n: bm.num_nodes(), keys: bm.coupling_keys(), acc: vec![0.0; bm.num_parameters()] }
    }

    fn add(&mut self, values: &[i8], p: f64) {
        for (a, &v) in self.acc.iter_mut().zip(values) {
            if v != 0 {
                *a += p * f64::from(v);
            }
        }
        for (a, &(k, l)) in self.acc[self.n..].iter_mut().zip(&self.keys) {
            let s = values[k] * values[l];
            if s != 0 {
                *a += p * f64::from(s);
            }
        }
    }

    fn add_scaled(&mut self, other: &Stats, w: f64) {
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            *a += w * b;
        }
    }
}

fn model_stats(bm: &BoltzmannMachine, beta: f64) -> Result<Stats> {
    let table = EnergyTable::build(bm)?;
    let n = bm.num_nodes();
    let basis = bm.basis();
    let mut stats = Stats::new(bm);
    let mut buf = vec![0i8; n];
    for (k, p) in table.probabilities(beta).into_iter().enumerate() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = basis.value(state_bit(k as u64, i, n));
        }
        stats.add(&buf, p);
    }
    Ok(stats)
}

fn clamped_exact_stats(bm: &BoltzmannMachine, cm: &ClampedMachine, beta: f64) -> Result<Stats> {
    let reduced = &cm.machine;
    let table = EnergyTable::build(reduced)?;
    let mut stats = Stats::new(bm);
    for (k, p) in table.probabilities(beta).into_iter().enumerate() {
        let free = SpinState::from_index(k as u64, reduced.num_nodes(), reduced.basis());
        stats.add(&cm.expand(free.values()), p);
    }
    Ok(stats)
}

/// Sampler call on the clamped machine; none when nothing is left free.
fn clamped_sampled_stats(
    bm: &BoltzmannMachine,
    cm: &ClampedMachine,
    sampler: &mut dyn Sampler,
    cfg: &SamplerConfig,
) -> Result<Stats> {
    let mut stats = Stats::new(bm);
    if cm.machine.num_nodes() == 0 {
        stats.add(&cm.expand(&[]), 1.0);
        return Ok(stats);
    }
    let ss = sampler.sample(&cm.machine, cfg)?;
    for (state, f) in ss.iter_frequencies() {
        stats.add(&cm.expand(state.values()), f);
    }
    Ok(stats)
}

fn assignment(nodes: std::ops::Range<usize>, bits: &[i8], bm: &BoltzmannMachine) -> Vec<(usize, i8)> {
    nodes.zip(in_basis(bits, bm.basis())).collect()
}

fn difference(bm: &BoltzmannMachine, plus: &Stats, minus: &Stats) -> GradientEstimate {
    let v: Vec<f64> = plus.acc.iter().zip(&minus.acc).map(|(a, b)| a - b).collect();
    GradientEstimate::from_vector(bm, &v).expect("stats match the machine")
}

/// Seed for the `call`-th sampler invocation within one gradient.
pub(crate) fn derive_seed(seed: u64, call: u64) -> u64 {
    let mut z = seed ^ call.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `dD_KL/dtheta` divided by beta: data-phase minus model-phase expectation of
/// `dE/dtheta`, by enumeration at inverse temperature `beta`.
pub fn exact_grad_dkl(bm: &BoltzmannMachine, dataset: &Dataset, beta: f64) -> Result<GradientEstimate> {
    check_visible_width(bm, dataset)?;
    let mut data = Stats::new(bm);
    for (row, q) in dataset.iter() {
        let cm = clamp(bm, &assignment(bm.visible_nodes(), row, bm))?;
        data.add_scaled(&clamped_exact_stats(bm, &cm, beta)?, q);
    }
    Ok(difference(bm, &data, &model_stats(bm, beta)?))
}

/// Sampled distribution gradient: one full-machine call plus at most one
/// clamped call per data row.
pub fn sampled_grad_dkl(
    bm: &BoltzmannMachine,
    dataset: &Dataset,
    sampler: &mut dyn Sampler,
    cfg: &SamplerConfig,
    resampling: Resampling,
) -> Result<GradientEstimate> {
    check_visible_width(bm, dataset)?;
    let mut call = 0u64;
    let mut next_cfg = || {
        call += 1;
        cfg.with_seed(derive_seed(cfg.seed, call))
    };
    let ss = sampler.sample(bm, &next_cfg())?;
    let mut model = Stats::new(bm);
    let visible: Vec<usize> = bm.visible_nodes().collect();
    let mut by_visible: HashMap<Vec<i8>, Vec<(&[i8], f64)>> = HashMap::new();
    for (state, f) in ss.iter_frequencies() {
        model.add(state.values(), f);
        by_visible.entry(state.project(&visible)).or_default().push((state.values(), f));
    }

    let mut data = Stats::new(bm);
    for (row, q) in dataset.iter() {
        let key = in_basis(row, bm.basis());
        match by_visible.get(&key) {
            Some(seen) if resampling == Resampling::WhenUnseen => {
                let mass: f64 = seen.iter().map(|(_, f)| f).sum();
                for (values, f) in seen {
                    data.add(values, q * f / mass);
                }
            }
            _ => {
                let cm = clamp(bm, &assignment(bm.visible_nodes(), row, bm))?;
                data.add_scaled(&clamped_sampled_stats(bm, &cm, sampler, &next_cfg())?, q);
            }
        }
    }
    Ok(difference(bm, &data, &model))
}

/// `dL/dtheta` divided by beta for `L = -sum ln p(v_out | v_in)`: per row, the
/// expectation with inputs and outputs clamped minus the expectation with only
/// the inputs clamped.
pub fn exact_grad_ncll(bm: &BoltzmannMachine, dataset: &Dataset, beta: f64) -> Result<GradientEstimate> {
    require_split(bm, dataset)?;
    let mut both = Stats::new(bm);
    let mut inputs = Stats::new(bm);
    for (row, _) in dataset.iter() {
        let cm = clamp(bm, &assignment(bm.visible_nodes(), row, bm))?;
        both.add_scaled(&clamped_exact_stats(bm, &cm, beta)?, 1.0);
        let cm = clamp(bm, &assignment(bm.input_nodes(), &row[..bm.num_input()], bm))?;
        inputs.add_scaled(&clamped_exact_stats(bm, &cm, beta)?, 1.0);
    }
    Ok(difference(bm, &both, &inputs))
}

/// Sampled conditional gradient: two clamped sampler calls per row (fewer
/// only when a clamping leaves no free node).
pub fn sampled_grad_ncll(
    bm: &BoltzmannMachine,
    dataset: &Dataset,
    sampler: &mut dyn Sampler,
    cfg: &SamplerConfig,
) -> Result<GradientEstimate> {
    require_split(bm, dataset)?;
    let mut both = Stats::new(bm);
    let mut inputs = Stats::new(bm);
    for (i, (row, _)) in dataset.iter().enumerate() {
        let i = i as u64;
        let cm = clamp(bm, &assignment(bm.visible_nodes(), row, bm))?;
        let c = cfg.with_seed(derive_seed(cfg.seed, 2 * i + 1));
        both.add_scaled(&clamped_sampled_stats(bm, &cm, sampler, &c)?, 1.0);
        let cm = clamp(bm, &assignment(bm.input_nodes(), &row[..bm.num_input()], bm))?;
        let c = cfg.with_seed(derive_seed(cfg.seed, 2 * i + 2));
        inputs.add_scaled(&clamped_sampled_stats(bm, &cm, sampler, &c)?, 1.0);
    }
    Ok(difference(bm, &both, &inputs))
}

/// Distribution gradient in the requested mode. Exact mode uses
/// `sampler_cfg.beta`; Sampled mode draws from the configured backend and
/// reuses model-phase samples for rows it already covers.
pub fn grad_dkl(
    bm: &BoltzmannMachine,
    dataset: &Dataset,
    mode: GradientMode,
    sampler_cfg: &SamplerConfig,
) -> Result<GradientEstimate> {
    match mode {
        GradientMode::Exact => exact_grad_dkl(bm, dataset, sampler_cfg.beta),
        GradientMode::Sampled => {
            let mut sampler = sampler_for(sampler_cfg)?;
            sampled_grad_dkl(bm, dataset, sampler.as_mut(), sampler_cfg, Resampling::WhenUnseen)
        }
    }
}

pub fn grad_ncll(
    bm: &BoltzmannMachine,
    dataset: &Dataset,
    mode: GradientMode,
    sampler_cfg: &SamplerConfig,
) -> Result<GradientEstimate> {
    match mode {
        GradientMode::Exact => exact_grad_ncll(bm, dataset, sampler_cfg.beta),
        GradientMode::Sampled => {
            let mut sampler = sampler_for(sampler_cfg)?;
            sampled_grad_ncll(bm, dataset, sampler.as_mut(), sampler_cfg)
        }
    }
}

/// Central differences `(f(theta + h) - f(theta - h)) / 2h` for every
/// parameter. Bounds are not enforced on the perturbed machines.
pub fn finite_difference_gradient(
    mut loss: impl FnMut(&BoltzmannMachine) -> Result<f64>,
    bm: &BoltzmannMachine,
    step: f64,
) -> Result<GradientEstimate> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let b = bm.bounds();
    let mut work = bm.clone().with_bounds(Bounds::unenforced(b.h_max, b.j_max))?;
    let theta = bm.parameters();
    let mut out = Vec::with_capacity(theta.len());
    let mut p = theta.clone();
    for i in 0..theta.len() {
        p[i] = theta[i] + step;
        work.set_parameters(&p)?;
        let up = loss(&work)?;
        p[i] = theta[i] - step;
        work.set_parameters(&p)?;
        let down = loss(&work)?;
        p[i] = theta[i];
        out.push((up - down) / (2.0 * step));
    }
    GradientEstimate::from_vector(bm, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{logic_gate, GateKind};
    use crate::ising::Basis;
    use crate::metrics::{dataset_kl, negative_conditional_log_likelihood, visible_probability};
    use crate::metrics::propositions::random_machine;
    use crate::samplers::ExactSampler;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: &GradientEstimate, b: &GradientEstimate) -> f64 {
        a.to_vector()
            .iter()
            .zip(b.to_vector())
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-4))
            .fold(0.0, f64::max)
    }

    #[test]
    fn quadratic_loss_finite_differences() {
        let mut bm = BoltzmannMachine::complete(2, 0, 0, Basis::ZeroOne);
        bm.set_parameters(&[0.3, -0.2, 0.5]).unwrap();
        let g = finite_difference_gradient(|m| Ok(m.parameters().iter().map(|x| x * x).sum()), &bm, 1e-4).unwrap();
        for (gi, t) in g.to_vector().iter().zip(bm.parameters()) {
            assert!((gi - 2.0 * t).abs() < 1e-9);
        }
    }

    #[test]
    fn dkl_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bm = random_machine(&mut rng, 5, 1.0).with_partition(3, 0, 2).unwrap();
        let data = Dataset::new(vec![vec![0, 1, 1], vec![1, 0, 0], vec![1, 1, 1]], vec![0.5, 0.3, 0.2], None).unwrap();
        let beta = 1.7;
        let exact = exact_grad_dkl(&bm, &data, beta).unwrap();
        let fd = finite_difference_gradient(|m| dataset_kl(m, beta, &data), &bm, 1e-5).unwrap();
        let scaled = GradientEstimate::from_vector(&bm, &exact.to_vector().iter().map(|g| g * beta).collect::<Vec<_>>()).unwrap();
        assert!(rel_err(&scaled, &fd) < 1e-6, "{}", rel_err(&scaled, &fd));
    }

    #[test]
    fn ncll_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bm = random_machine(&mut rng, 4, 1.0).with_partition(2, 1, 1).unwrap();
        let data = logic_gate(GateKind::Xor);
        let exact = exact_grad_ncll(&bm, &data, 1.0).unwrap();
        let fd = finite_difference_gradient(|m| negative_conditional_log_likelihood(m, 1.0, &data), &bm, 1e-5).unwrap();
        assert!(rel_err(&exact, &fd) < 1e-6, "{}", rel_err(&exact, &fd));
        assert_eq!(exact.coupling(0, 1), Some(0.0));
    }

    #[test]
    fn bias_component_is_data_mean_minus_model_mean() {
        let mut bm = BoltzmannMachine::complete(2, 0, 0, Basis::ZeroOne);
        bm.set_parameters(&[0.4, -0.3, 0.7]).unwrap();
        let data = Dataset::new(vec![vec![1, 0], vec![1, 1]], vec![0.75, 0.25], None).unwrap();
        let g = exact_grad_dkl(&bm, &data, 1.0).unwrap();
        // Hand enumeration: energies 0, -0.3, 0.4, 0.8 for 00, 01, 10, 11.
        let w: Vec<f64> = [0.0, -0.3, 0.4, 0.8].iter().map(|e: &f64| (-e).exp()).collect();
        let z: f64 = w.iter().sum();
        let model_mean_0 = (w[2] + w[3]) / z;
        let model_mean_1 = (w[1] + w[3]) / z;
        assert!((g.d_bias[0] - (1.0 - model_mean_0)).abs() < 1e-12);
        assert!((g.d_bias[1] - (0.25 - model_mean_1)).abs() < 1e-12);
        assert!((g.d_coupling[0] - (0.25 - w[3] / z)).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_model_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bm = random_machine(&mut rng, 4, 1.0).with_partition(2, 0, 2).unwrap();
        let p = visible_probability(&bm, 1.3).unwrap();
        let data = Dataset::new(p.support().to_vec(), p.probs().to_vec(), None).unwrap();
        assert!(exact_grad_dkl(&bm, &data, 1.3).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn sampled_gradient_approaches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bm = random_machine(&mut rng, 4, 1.0).with_partition(2, 1, 1).unwrap();
        let data = logic_gate(GateKind::And);
        let exact = exact_grad_dkl(&bm, &data, 1.0).unwrap();
        let mut errs = Vec::new();
        for reads in [100, 10_000, 1_000_000] {
            let cfg = SamplerConfig::new(1.0, reads, 3);
            let g = sampled_grad_dkl(&bm, &data, &mut ExactSampler, &cfg, Resampling::Always).unwrap();
            errs.push(g.linf_distance(&exact));
        }
        assert!(errs[2] < errs[0], "{errs:?}");
        assert!(errs[2] < 0.01, "{errs:?}");
        let exhaustive = SamplerConfig { exhaustive: true, ..SamplerConfig::new(1.0, 1, 0) };
        let g = sampled_grad_dkl(&bm, &data, &mut ExactSampler, &exhaustive, Resampling::WhenUnseen).unwrap();
        assert!(g.linf_distance(&exact) < 1e-12);
        let n = sampled_grad_ncll(&bm, &data, &mut ExactSampler, &exhaustive).unwrap();
        assert!(n.linf_distance(&exact_grad_ncll(&bm, &data, 1.0).unwrap()) < 1e-12);
    }
}
