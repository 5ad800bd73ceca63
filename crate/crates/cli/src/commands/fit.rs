use std::path::PathBuf;

use clap::Args;
use qbm_core::metrics::fit_beta;
use qbm_core::metrics::propositions::random_machine;
use qbm_core::samplers::sampler_for;
use qbm_core::SampleSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::inputs::{parse_grid, SamplerArgs};
use crate::manifest::Run;

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Fit a saved sample file instead of sampling random machines.
    #[arg(long, requires = "model")]
    pub samples: Option<PathBuf>,
    /// Model the sample file was drawn from.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Graph sizes for random complete machines: `4..10`, `4..=10` or `4,6,8`.
    #[arg(long, default_value = "4..=10")]
    pub sizes: String,
    /// Parameters of random machines are uniform on [-scale, scale].
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Seed for the random machines.
    #[arg(long, default_value_t = 0)]
    pub machine_seed: u64,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value = "0.1:10:100")]
    pub beta_grid: String,
    #[arg(long, default_value = "out/fit")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub size: usize,
    pub requested_beta: f64,
    pub beta_star: f64,
    pub hellinger: f64,
    pub backend: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
}

pub fn parse_sizes(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::input(format!("sizes `{spec}` is not a..b, a..=b or a comma list"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let sizes: Vec<usize> = if let Some((a, b)) = spec.split_once("..=") {
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = spec.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else {
        spec.split(',').map(num).collect::<CliResult<_>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

pub fn run(args: &FitArgs) -> CliResult<FitReport> {
    let mut run = Run::create(&args.out_dir)?;
    let grid = parse_grid(&args.beta_grid)?;
    let mut rows = Vec::new();

    if let Some(path) = &args.samples {
        let model_path = args.model.as_ref().ok_or_else(|| CliError::input("--samples needs --model"))?;
        run.add_input_file(path)?;
        run.add_input_file(model_path)?;
        let ss = SampleSet::load(path)?;
        let bm = qbm_core::BoltzmannMachine::load(model_path)?;
        let fit = fit_beta(&ss, &bm, grid.values())?;
        rows.push(FitRow {
            size: bm.num_nodes(),
            requested_beta: ss.beta(),
            beta_star: fit.beta_star,
            hellinger: fit.distance,
            backend: ss.backend_id().to_string(),
        });
    } else {
        let cfg = args.sampler.config();
        let mut sampler = sampler_for(&cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.machine_seed);
        run.add_seed(args.machine_seed);
        run.add_seed(cfg.seed);
        for size in parse_sizes(&args.sizes)? {
            let bm = random_machine(&mut rng, size, args.scale);
            let ss = sampler.sample(&bm, &cfg)?;
            let fit = fit_beta(&ss, &bm, grid.values())?;
            rows.push(FitRow {
                size,
                requested_beta: cfg.beta,
                beta_star: fit.beta_star,
                hellinger: fit.distance,
                backend: ss.backend_id().to_string(),
            });
        }
    }

    let mut csv = String::from("size,requested_beta,beta_star,hellinger\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.size, r.requested_beta, r.beta_star, r.hellinger));
    }
    run.write_bytes("fit_beta.csv", csv.as_bytes())?;
    let report = FitReport { rows };
    run.write_json("fit_beta.json", &report)?;
    run.finish("fit-beta", args)?;
    Ok(report)
}
