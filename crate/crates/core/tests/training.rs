//! End-to-end training loops, model files and the bundled dataset files.

use std::path::PathBuf;

use qbm_core::datasets::{builtin, load_dataset, load_fixture, logic_gate, GateKind, FIXTURE_NAMES};
use qbm_core::metrics::{dataset_kl, row_conditionals};
use qbm_core::samplers::{Backend, ExactSampler};
use qbm_core::training::{
    train_distribution, train_distribution_with, train_function_approximator, Architecture, GradientMode, Init,
};
use qbm_core::{BoltzmannMachine, SamplerConfig, TrainingConfig};

fn datasets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("datasets")
}

#[test]
fn bundled_csv_files_match_generators() {
    for name in ["and", "or", "xor", "adder2", "two_phase"] {
        let file = load_dataset(datasets_dir().join(format!("{name}.csv"))).unwrap();
        let generated = builtin(name).unwrap();
        assert_eq!(file.rows(), generated.rows(), "{name}");
        assert_eq!(file.io_split(), generated.io_split(), "{name}");
        for (a, b) in file.weights().iter().zip(generated.weights()) {
            assert!((a - b).abs() < 1e-15, "{name}");
        }
    }
}

#[test]
fn model_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in FIXTURE_NAMES {
        let bm = load_fixture(name).unwrap();
        let path = dir.path().join(format!("{name}.json"));
        bm.save(&path).unwrap();
        assert_eq!(BoltzmannMachine::load(&path).unwrap(), bm, "{name}");
    }
}

#[test]
fn trained_model_reloads_as_initial_state() {
    let data = logic_gate(GateKind::Or);
    let arch = Architecture::new(3, 0, 1);
    let mut cfg = TrainingConfig { max_steps: 50, seed: 4, ..Default::default() };
    cfg.sampler.beta = 2.0;
    let (bm, trace) = train_distribution(&data, &arch, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("or.json");
    bm.save(&path).unwrap();

    let resumed_cfg = TrainingConfig { init: Init::FromFile { path: path.clone() }, max_steps: 50, ..cfg.clone() };
    let (_, resumed) = train_distribution(&data, &arch, &resumed_cfg).unwrap();
    let first = resumed.initial_loss.unwrap();
    assert!((first - trace.final_loss().unwrap()).abs() < 1e-9);
    assert!(resumed.final_loss().unwrap() <= first);
}

#[test]
fn sampled_training_reduces_divergence() {
    let data = logic_gate(GateKind::And);
    let arch = Architecture::new(3, 0, 1);
    let mut cfg =
        TrainingConfig { gradient_mode: GradientMode::Sampled, max_steps: 150, seed: 2, ..Default::default() };
    cfg.sampler = SamplerConfig::new(2.0, 4000, 8).with_backend(Backend::Exact);
    let (bm, trace) = train_distribution_with(&data, &arch, &cfg, &mut ExactSampler).unwrap();
    let start = trace.initial_loss.unwrap();
    let end = dataset_kl(&bm, 2.0, &data).unwrap();
    assert!(end < 0.6 * start, "{start} -> {end}");
}

#[test]
fn sampled_and_exact_training_agree_in_outcome() {
    let data = logic_gate(GateKind::Or);
    let arch = Architecture::new(3, 0, 1);
    let mut exact = TrainingConfig { max_steps: 200, seed: 6, ..Default::default() };
    exact.sampler.beta = 2.0;
    let sampled = TrainingConfig {
        gradient_mode: GradientMode::Sampled,
        sampler: SamplerConfig::new(2.0, 20_000, 1),
        ..exact.clone()
    };
    let (_, a) = train_distribution(&data, &arch, &exact).unwrap();
    let (_, b) = train_distribution(&data, &arch, &sampled).unwrap();
    let (a, b) = (a.final_loss().unwrap(), b.final_loss().unwrap());
    assert!((a - b).abs() < 0.05, "exact {a} vs sampled {b}");
}

#[test]
fn function_training_sharpens_conditionals_with_beta() {
    let data = logic_gate(GateKind::And);
    let arch = Architecture::new(2, 1, 1);
    let mut cfg = TrainingConfig { max_steps: 300, seed: 1, ..Default::default() };
    cfg.sampler.beta = 3.0;
    let (bm, trace) = train_function_approximator(&data, &arch, &cfg).unwrap();
    assert!(trace.final_loss().unwrap() < trace.initial_loss.unwrap());
    let mut previous = row_conditionals(&bm, 1.0, &data).unwrap();
    for beta in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let now = row_conditionals(&bm, beta, &data).unwrap();
        for (p, q) in previous.iter().zip(&now) {
            assert!(q >= p, "conditional fell at beta {beta}: {p} -> {q}");
        }
        previous = now;
    }
    assert!(previous.iter().all(|&p| p > 0.9), "{previous:?}");
}

#[test]
fn function_training_requires_a_split() {
    let data = builtin("two_phase:4").unwrap();
    let err = train_function_approximator(&data, &Architecture::new(4, 0, 1), &TrainingConfig::default());
    assert!(err.is_err());
}
