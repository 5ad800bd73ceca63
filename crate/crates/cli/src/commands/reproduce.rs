//! The full experiment pipeline at desk scale: two-phase and XOR beta
//! analysis, AND conditionals, AND restarts, OR hidden-size comparison,
//! beta recovery for a local and a drifting remote sampler, the adder
//! tables and the monotonicity ensemble.

use std::path::PathBuf;

use clap::Args;
use qbm_core::datasets::{adder2, load_fixture, logic_gate, two_phase, GateKind};
use qbm_core::metrics::propositions::{check_machine, random_machine, verify_ensemble};
use qbm_core::metrics::{dkl_optimum, fit_beta, row_conditionals, sweep_beta, BetaGrid};
use qbm_core::samplers::mock::{MockConfig, MockServer};
use qbm_core::samplers::{gibbs_sample, remote_sample};
use qbm_core::training::{train_distribution, Architecture};
use qbm_core::{BoltzmannMachine, Dataset, SamplerConfig, TrainingConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::train::{trace_csv, DEFAULT_TRAINING_BETA};
use crate::error::CliResult;
use crate::manifest::Run;

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReproduceArgs {
    /// Fewer steps, seeds and sizes; for smoke tests.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out/reproduce")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimum {
    pub name: String,
    pub beta: f64,
    pub dkl: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaRecovery {
    pub size: usize,
    pub local_beta_star: f64,
    pub remote_beta_star: f64,
    pub remote_effective_beta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceSummary {
    pub training_beta: f64,
    pub optima: Vec<Optimum>,
    pub propositions_fixtures_pass: Vec<(String, bool)>,
    pub and_fixture_min_conditional_beta10: f64,
    pub and_restart_final_dkl: Vec<f64>,
    pub or_hidden_optima: Vec<Optimum>,
    pub beta_recovery: Vec<BetaRecovery>,
    pub adder_min_conditional_beta5: Vec<(String, f64)>,
    pub ensemble_machines: usize,
    pub ensemble_failures: usize,
}

fn sweep_to(run: &mut Run, name: &str, bm: &BoltzmannMachine, data: &Dataset, grid: &BetaGrid) -> CliResult<Optimum> {
    let sweep = sweep_beta(bm, Some(data), grid.values())?;
    let mut csv = Vec::new();
    sweep.write_csv(&mut csv)?;
    run.write_bytes(&format!("{name}.csv"), &csv)?;
    let (beta, dkl) = dkl_optimum(bm, data, grid.values())?;
    Ok(Optimum { name: name.to_string(), beta, dkl })
}

pub fn run(args: &ReproduceArgs) -> CliResult<ReproduceSummary> {
    let mut run = Run::create(&args.out_dir)?;
    run.add_seed(args.seed);
    let (steps, seeds, hidden, sizes, reads, ensemble): (usize, u64, &[usize], Vec<usize>, u64, usize) = if args.quick {
        (100, 2, &[1, 2], (4..=5).collect(), 20_000, 20)
    } else {
        (1000, 5, &[1, 2, 5, 10], (4..=10).collect(), 100_000, 200)
    };
    let wide = BetaGrid::log(0.1, 100.0, 80)?;
    let default_grid = BetaGrid::default();
    let mut optima = Vec::new();

    let table3 = load_fixture("table3_two_phase")?;
    optima.push(sweep_to(&mut run, "two_phase_sweep", &table3, &two_phase(10)?, &default_grid)?);

    let xor = logic_gate(GateKind::Xor);
    let mut propositions_fixtures_pass = Vec::new();
    for name in ["fig4a_xor_ground", "fig4b_xor_trained"] {
        let bm = load_fixture(name)?;
        optima.push(sweep_to(&mut run, &format!("{name}_sweep"), &bm, &xor, &wide)?);
        propositions_fixtures_pass.push((name.to_string(), check_machine(&bm, wide.values())?.passed()));
    }

    let and = logic_gate(GateKind::And);
    let fig7 = load_fixture("fig7a_and")?;
    let cond_grid = BetaGrid::linear(1.0, 10.0, 37)?;
    optima.push(sweep_to(&mut run, "fig7a_and_sweep", &fig7, &and, &cond_grid)?);
    let and_min = row_conditionals(&fig7, 10.0, &and)?.into_iter().fold(f64::INFINITY, f64::min);

    let base = {
        let mut c = TrainingConfig { max_steps: steps, ..Default::default() };
        c.sampler.beta = DEFAULT_TRAINING_BETA;
        c
    };
    run.write_json("training_config.json", &base)?;
    let mut finals = Vec::new();
    for seed in args.seed..args.seed + seeds {
        let (_, trace) = train_distribution(&and, &Architecture::new(3, 0, 1), &TrainingConfig { seed, ..base.clone() })?;
        run.write_bytes(&format!("and_restart_seed{seed}.csv"), &trace_csv(&trace)?)?;
        finals.push(trace.final_loss().unwrap_or(f64::NAN));
    }

    let or = logic_gate(GateKind::Or);
    let mut or_hidden_optima = Vec::new();
    for &h in hidden {
        let cfg = TrainingConfig { seed: args.seed, ..base.clone() };
        let (bm, trace) = train_distribution(&or, &Architecture::new(3, 0, h), &cfg)?;
        run.write_bytes(&format!("or_h{h}_trace.csv"), &trace_csv(&trace)?)?;
        or_hidden_optima.push(sweep_to(&mut run, &format!("or_h{h}_sweep"), &bm, &or, &wide)?);
    }

    let remote_cfg = MockConfig { beta: DEFAULT_TRAINING_BETA, drift: 0.05, seed: args.seed, ..Default::default() };
    let server = MockServer::start("127.0.0.1:0", remote_cfg.clone())?;
    let fit_grid = BetaGrid::linear(0.1, 10.0, 100)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut beta_recovery = Vec::new();
    let mut csv = String::from("size,local_beta_star,remote_beta_star,remote_effective_beta\n");
    for &n in &sizes {
        let bm = random_machine(&mut rng, n, 1.0);
        let cfg = SamplerConfig::new(DEFAULT_TRAINING_BETA, reads, args.seed + n as u64);
        let local = fit_beta(&gibbs_sample(&bm, &cfg)?, &bm, fit_grid.values())?;
        let remote = fit_beta(&remote_sample(&bm, &cfg, server.url())?, &bm, fit_grid.values())?;
        let row = BetaRecovery {
            size: n,
            local_beta_star: local.beta_star,
            remote_beta_star: remote.beta_star,
            remote_effective_beta: remote_cfg.effective_beta(n),
        };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.size, row.local_beta_star, row.remote_beta_star, row.remote_effective_beta
        ));
        beta_recovery.push(row);
    }
    drop(server);
    run.write_bytes("beta_recovery.csv", csv.as_bytes())?;

    let adder = adder2();
    let mut adder_min = Vec::new();
    for name in ["table4_adder_function", "table5_adder_distribution"] {
        let bm = load_fixture(name)?;
        let min = row_conditionals(&bm, 5.0, &adder)?.into_iter().fold(f64::INFINITY, f64::min);
        adder_min.push((name.to_string(), min));
    }

    let (report, _) = verify_ensemble(ensemble, 8, args.seed, default_grid.values(), true)?;
    run.write_json("propositions.json", &report)?;

    let summary = ReproduceSummary {
        training_beta: DEFAULT_TRAINING_BETA,
        optima,
        propositions_fixtures_pass,
        and_fixture_min_conditional_beta10: and_min,
        and_restart_final_dkl: finals,
        or_hidden_optima,
        beta_recovery,
        adder_min_conditional_beta5: adder_min,
        ensemble_machines: report.machines,
        ensemble_failures: report.failed,
    };
    run.write_json("summary.json", &summary)?;
    run.finish("reproduce", args)?;
    Ok(summary)
}
