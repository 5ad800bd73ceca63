//! Runs the `qbm` binary end to end.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn qbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm")).args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = qbm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_models_traces_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("train");
    let summary = ok_json(&[
        "train", "--dataset", "and", "--arch", "3v1h", "--seeds", "3", "--max-steps", "60", "--out-dir", s(&out),
    ]);
    assert_eq!(summary["runs"].as_array().unwrap().len(), 3);
    assert_eq!(summary["beta"], 3.0);
    let best = summary["best_loss"].as_f64().unwrap();
    for run in summary["runs"].as_array().unwrap() {
        assert!(run["final_loss"].as_f64().unwrap() >= best);
        assert!(run["final_loss"].as_f64().unwrap() < run["initial_loss"].as_f64().unwrap());
    }

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seeds"], serde_json::json!([0, 1, 2]));
    assert_eq!(manifest["inputs"][0]["name"], "builtin:and");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["config.json", "model_seed0.json", "trace_seed2.csv", "best_model.json", "summary.json"] {
        assert!(outputs.contains(&f), "{f} missing from {outputs:?}");
        assert!(out.join(f).is_file());
    }
    let trace = std::fs::read_to_string(out.join("trace_seed0.csv")).unwrap();
    assert!(trace.starts_with("step,loss,delta_inf,seconds"));
}

#[test]
fn training_is_rerunnable_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok_json(&["train", "--dataset", "xor", "--arch", "3v1h", "--max-steps", "40", "--seed", "7", "--out-dir", s(&out)]);
        std::fs::read(out.join("model_seed7.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn function_mode_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"eta": 0.2, "max_steps": 80, "sampler": {"beta": 2.0}}"#).unwrap();
    let out = dir.path().join("fn");
    let summary =
        ok_json(&["train", "--dataset", "and", "--arch", "2i1o1h", "--mode", "function", "--config", s(&cfg), "--out-dir", s(&out)]);
    assert_eq!(summary["loss"], "ncll");
    assert_eq!(summary["beta"], 2.0);
    let used = read_json(&out.join("config.json"));
    assert_eq!(used["eta"], 0.2);
    assert_eq!(used["max_steps"], 80);
    let manifest = read_json(&out.join("manifest.json"));
    assert!(manifest["inputs"].as_array().unwrap().iter().any(|i| i["name"] == s(&cfg)));
}

#[test]
fn strict_ranges_reject_out_of_range_momentum() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbm(&["train", "--dataset", "and", "--nu", "0.95", "--strict-ranges", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "input");
}

#[test]
fn missing_dataset_file_exits_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbm(&["train", "--dataset", "missing/and.csv", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["exit_code"], 2);
    assert!(err["error"]["message"].as_str().unwrap().contains("missing/and.csv"));
}

#[test]
fn usage_errors_exit_2() {
    let out = qbm(&["sweep-beta", "--fixture", "fig7a_and", "--model", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "input");
    assert_eq!(qbm(&["no-such-command"]).status.code(), Some(2));
    assert!(qbm(&["--help"]).status.success());
}

#[test]
fn sweep_of_two_phase_fixture_finds_optimum_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let summary =
        ok_json(&["sweep-beta", "--fixture", "table3_two_phase", "--dataset", "two_phase", "--out-dir", s(&out)]);
    let beta = summary["optimum_beta"].as_f64().unwrap();
    assert!((1.5..=3.0).contains(&beta), "{beta}");
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("beta,dkl,dkl_d1,dkl_d2,p_state_0000000000"));
    assert_eq!(csv.lines().count(), 41);
}

#[test]
fn sweep_of_flat_machine_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("flat.json");
    qbm_core::BoltzmannMachine::complete(3, 0, 1, qbm_core::Basis::ZeroOne).save(&model).unwrap();
    let out = dir.path().join("sweep");
    ok_json(&["sweep-beta", "--model", s(&model), "--dataset", "xor", "--beta-grid", "0.5:5:6:lin", "--out-dir", s(&out)]);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let dkl: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(dkl.len(), 6);
    assert!(dkl.iter().all(|d| (d - dkl[0]).abs() < 1e-12));
    assert!((dkl[0] - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn fit_beta_recovers_exhaustive_and_gibbs_beta() {
    let dir = tempfile::tempdir().unwrap();
    let exact = ok_json(&[
        "fit-beta", "--backend", "exact", "--exhaustive", "--beta", "2.5", "--sizes", "3,5", "--out-dir",
        s(&dir.path().join("a")),
    ]);
    for row in exact["rows"].as_array().unwrap() {
        assert!((row["beta_star"].as_f64().unwrap() - 2.5).abs() < 1e-4, "{row}");
    }
    let gibbs = ok_json(&[
        "fit-beta", "--backend", "gibbs", "--beta", "3", "--reads", "50000", "--sizes", "4..=6", "--out-dir",
        s(&dir.path().join("b")),
    ]);
    for row in gibbs["rows"].as_array().unwrap() {
        assert!((row["beta_star"].as_f64().unwrap() - 3.0).abs() < 0.3, "{row}");
    }
}

#[test]
fn fit_beta_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("and.json");
    qbm_core::datasets::load_fixture("fig7a_and").unwrap().save(&model).unwrap();
    let out = dir.path().join("s");
    ok_json(&["sample", "--model", s(&model), "--beta", "1.7", "--reads", "100000", "--out-dir", s(&out)]);
    let fit = ok_json(&[
        "fit-beta", "--samples", s(&out.join("samples.json")), "--model", s(&model), "--out-dir", s(&dir.path().join("f")),
    ]);
    let beta = fit["rows"][0]["beta_star"].as_f64().unwrap();
    assert!((beta - 1.7).abs() < 0.15, "{beta}");
}

/// Starts `serve-mock` on a free port and returns the child plus its URL.
fn spawn_mock(extra: &[&str]) -> (std::process::Child, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qbm"))
        .args(["serve-mock", "--addr", "127.0.0.1:0"])
        .args(extra)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = serde_json::from_str::<Value>(&line).unwrap()["url"].as_str().unwrap().to_string();
    (child, url)
}

#[test]
fn remote_fit_against_drifting_mock_decreases_with_size() {
    let (mut child, url) = spawn_mock(&["--beta", "3", "--drift", "0.1"]);
    let dir = tempfile::tempdir().unwrap();
    let report = ok_json(&[
        "fit-beta", "--backend", "remote", "--endpoint", &url, "--beta", "3", "--reads", "100000", "--sizes", "3,6,9",
        "--out-dir", s(dir.path()),
    ]);
    child.kill().unwrap();
    child.wait().unwrap();
    let betas: Vec<f64> = report["rows"].as_array().unwrap().iter().map(|r| r["beta_star"].as_f64().unwrap()).collect();
    assert!(betas.windows(2).all(|w| w[1] < w[0]), "{betas:?}");
    assert!((betas[0] - 3.0 / 1.3).abs() < 0.15, "{betas:?}");
}

#[test]
fn remote_capacity_error_exits_2() {
    let (mut child, url) = spawn_mock(&["--max-nodes", "2"]);
    let dir = tempfile::tempdir().unwrap();
    let out = qbm(&["sample", "--fixture", "fig7a_and", "--backend", "remote", "--endpoint", &url, "--out-dir", s(dir.path())]);
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_backends() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact");
    let summary = ok_json(&["sample", "--fixture", "fig7a_and", "--exhaustive", "--beta", "2", "--out-dir", s(&out)]);
    assert_eq!(summary["distinct_states"], 16);
    assert!((summary["total_frequency"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let set = qbm_core::SampleSet::load(out.join("samples.json")).unwrap();
    assert!(set.is_exhaustive());

    let out = dir.path().join("gibbs");
    ok_json(&["sample", "--fixture", "fig7a_and", "--backend", "gibbs", "--reads", "10000", "--out-dir", s(&out)]);
    let set = qbm_core::SampleSet::load(out.join("samples.json")).unwrap();
    assert_eq!(set.counts().unwrap().iter().sum::<u64>(), 10_000);
}

#[test]
fn dead_endpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = qbm(&[
        "sample", "--fixture", "fig7a_and", "--backend", "remote", "--endpoint", "http://127.0.0.1:9", "--timeout", "2",
        "--out-dir", s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "transport");
}

#[test]
fn verify_propositions_reports() {
    let dir = tempfile::tempdir().unwrap();
    let empty = ok_json(&["verify-propositions", "--count", "0", "--out-dir", s(&dir.path().join("a"))]);
    assert_eq!(empty["machines"], 0);
    let report = ok_json(&[
        "verify-propositions", "--count", "25", "--max-nodes", "6", "--include-flat", "--out-dir", s(&dir.path().join("b")),
    ]);
    assert_eq!(report["machines"], 26);
    assert_eq!(report["failed"], 0);
    assert_eq!(report["non_strict"], 1);
    assert!(dir.path().join("b/propositions.json").is_file());
}

#[test]
fn quick_reproduce_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok_json(&["reproduce", "--quick", "--out-dir", s(dir.path())]);
    assert_eq!(summary["ensemble_failures"], 0);
    let two_phase = summary["optima"][0]["beta"].as_f64().unwrap();
    assert!((1.5..=3.0).contains(&two_phase));
    let recovery = summary["beta_recovery"].as_array().unwrap();
    assert!(recovery[1]["remote_beta_star"].as_f64() < recovery[0]["remote_beta_star"].as_f64());
    let manifest = read_json(&dir.path().join("manifest.json"));
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(dir.path().join(f.as_str().unwrap()).is_file(), "{f}");
    }
}
