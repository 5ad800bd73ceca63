//! Remote client against the mock annealer, and sampler-driven gradients.

use qbm_core::datasets::{load_fixture, logic_gate, GateKind};
use qbm_core::metrics::propositions::random_machine;
use qbm_core::metrics::{fit_beta, hellinger, model_probability};
use qbm_core::samplers::mock::{MockConfig, MockFault, MockServer};
use qbm_core::samplers::{empirical_distribution, exact_sample, remote_sample, ExactSampler, RemoteSampler};
use qbm_core::training::{exact_grad_dkl, sampled_grad_dkl, sampled_grad_ncll, Resampling};
use qbm_core::{Basis, BoltzmannMachine, Error, Result, SampleSet, Sampler, SamplerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn server(cfg: MockConfig) -> MockServer {
    MockServer::start("127.0.0.1:0", cfg).unwrap()
}

#[test]
fn remote_draws_match_exact_distribution() {
    let srv = server(MockConfig { beta: 2.0, seed: 5, ..Default::default() });
    for bm in [load_fixture("fig7a_and").unwrap(), load_fixture("fig4a_xor_ground").unwrap()] {
        let ss = remote_sample(&bm, &SamplerConfig::new(2.0, 50_000, 0), srv.url()).unwrap();
        assert_eq!(ss.basis(), Basis::ZeroOne);
        assert_eq!(ss.num_reads(), 50_000);
        let nodes: Vec<usize> = (0..bm.num_nodes()).collect();
        let emp = empirical_distribution(&ss, &nodes).unwrap();
        let exact = model_probability(&bm, 2.0, &nodes).unwrap();
        assert!(hellinger(&emp, &exact) < 0.01);
    }
}

#[test]
fn remote_sampler_works_for_plus_minus_machines() {
    let srv = server(MockConfig { beta: 1.0, ..Default::default() });
    let mut bm = BoltzmannMachine::complete(3, 0, 0, Basis::PlusMinus);
    bm.set_bias(0, 0.7).unwrap();
    bm.set_coupling(1, 2, -0.4).unwrap();
    let mut sampler = RemoteSampler::new(srv.url());
    let ss = sampler.sample(&bm, &SamplerConfig::new(1.0, 40_000, 1)).unwrap();
    assert_eq!(ss.basis(), Basis::PlusMinus);
    let emp = empirical_distribution(&ss, &[0, 1, 2]).unwrap();
    let exact = model_probability(&bm, 1.0, &[0, 1, 2]).unwrap();
    assert!(hellinger(&emp, &exact) < 0.01);
}

#[test]
fn malformed_replies_are_protocol_errors() {
    let bm = load_fixture("fig7a_and").unwrap();
    let cfg = SamplerConfig::new(1.0, 10, 0);
    for fault in [MockFault::TruncatedSamples, MockFault::Garbage] {
        let srv = server(MockConfig { fault: Some(fault), ..Default::default() });
        let err = remote_sample(&bm, &cfg, srv.url()).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "{fault:?}: {err}");
        assert!(!err.is_retryable());
    }
    let srv = server(MockConfig { fault: Some(MockFault::ServerError), ..Default::default() });
    let err = remote_sample(&bm, &cfg, srv.url()).unwrap_err();
    assert!(err.is_retryable(), "{err}");
}

#[test]
fn oversized_problem_is_a_capacity_error() {
    let srv = server(MockConfig { max_nodes: 3, ..Default::default() });
    let bm = load_fixture("fig7a_and").unwrap();
    let err = remote_sample(&bm, &SamplerConfig::new(1.0, 10, 0), srv.url()).unwrap_err();
    assert!(matches!(err, Error::Capacity(_)), "{err}");
}

#[test]
fn unknown_route_is_a_protocol_error() {
    let srv = server(MockConfig::default());
    let bm = load_fixture("fig7a_and").unwrap();
    let url = format!("{}/nowhere", srv.url());
    assert!(matches!(remote_sample(&bm, &SamplerConfig::new(1.0, 10, 0), &url), Err(Error::Protocol(_))));
}

#[test]
fn drifting_server_beta_is_recovered_and_falls_with_size() {
    let mock = MockConfig { beta: 4.0, drift: 0.05, seed: 3, ..Default::default() };
    let srv = server(mock.clone());
    let grid: Vec<f64> = (1..=80).map(|i| 0.1 * f64::from(i)).collect();
    let mut fitted = Vec::new();
    for n in [3, 6, 9] {
        let bm = random_machine(&mut ChaCha8Rng::seed_from_u64(n as u64), n, 1.0);
        let ss = remote_sample(&bm, &SamplerConfig::new(4.0, 200_000, 0), srv.url()).unwrap();
        let fit = fit_beta(&ss, &bm, &grid).unwrap();
        let truth = mock.effective_beta(n);
        assert!((fit.beta_star - truth).abs() / truth < 0.1, "n={n}: {} vs {truth}", fit.beta_star);
        fitted.push(fit.beta_star);
    }
    assert!(fitted.windows(2).all(|w| w[1] < w[0]), "{fitted:?}");
}

/// Counts calls and checks every request against the expected node count.
struct Counting {
    calls: usize,
    inner: ExactSampler,
}

impl Sampler for Counting {
    fn sample(&mut self, bm: &BoltzmannMachine, cfg: &SamplerConfig) -> Result<SampleSet> {
        self.calls += 1;
        self.inner.sample(bm, cfg)
    }

    fn id(&self) -> &str {
        "counting"
    }
}

#[test]
fn sampled_gradients_stay_within_call_budget() {
    let bm = load_fixture("fig7a_and").unwrap();
    let data = logic_gate(GateKind::And);
    let cfg = SamplerConfig::new(1.0, 2000, 7);

    let mut s = Counting { calls: 0, inner: ExactSampler };
    sampled_grad_dkl(&bm, &data, &mut s, &cfg, Resampling::Always).unwrap();
    assert_eq!(s.calls, 1 + data.len());

    let mut s = Counting { calls: 0, inner: ExactSampler };
    sampled_grad_dkl(&bm, &data, &mut s, &cfg, Resampling::WhenUnseen).unwrap();
    assert!(s.calls <= 1 + data.len());

    let mut s = Counting { calls: 0, inner: ExactSampler };
    sampled_grad_ncll(&bm, &data, &mut s, &cfg).unwrap();
    assert!(s.calls <= 2 * data.len(), "{} calls", s.calls);
}

#[test]
fn sampled_gradient_converges_to_exact() {
    let bm = load_fixture("fig7a_and").unwrap();
    let data = logic_gate(GateKind::And);
    let exact = exact_grad_dkl(&bm, &data, 1.5).unwrap();
    let err = |reads| {
        let cfg = SamplerConfig::new(1.5, reads, 21);
        sampled_grad_dkl(&bm, &data, &mut ExactSampler, &cfg, Resampling::Always).unwrap().linf_distance(&exact)
    };
    let (coarse, fine) = (err(1_000), err(200_000));
    assert!(fine < 0.02, "{fine}");
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn exact_sampler_is_reproducible_across_runs() {
    let bm = load_fixture("fig4b_xor_trained").unwrap();
    let cfg = SamplerConfig::new(3.0, 1000, 99);
    assert_eq!(exact_sample(&bm, &cfg).unwrap(), exact_sample(&bm, &cfg).unwrap());
}
