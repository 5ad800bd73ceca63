use std::path::PathBuf;

use clap::Args;
use qbm_core::samplers::sampler_for;
use serde::Serialize;

use crate::error::CliResult;
use crate::inputs::{ModelArgs, SamplerArgs};
use crate::manifest::Run;

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: ModelArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value = "out/sample")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub backend: String,
    pub beta: f64,
    pub num_reads: u64,
    pub distinct_states: usize,
    pub exhaustive: bool,
    pub total_frequency: f64,
    pub mean_energy: f64,
    pub min_energy: f64,
}

pub fn run(args: &SampleArgs) -> CliResult<SampleSummary> {
    let mut run = Run::create(&args.out_dir)?;
    let bm = args.source.load(&mut run)?;
    let cfg = args.sampler.config();
    run.add_seed(cfg.seed);
    let ss = sampler_for(&cfg)?.sample(&bm, &cfg)?;
    run.write_bytes("samples.json", (ss.to_json()? + "\n").as_bytes())?;

    let mut mean = 0.0;
    let mut total = 0.0;
    let mut min = f64::INFINITY;
    for (state, f) in ss.iter_frequencies() {
        let e = bm.energy(state)?;
        mean += f * e;
        total += f;
        min = min.min(e);
    }
    let summary = SampleSummary {
        backend: ss.backend_id().to_string(),
        beta: ss.beta(),
        num_reads: ss.num_reads(),
        distinct_states: ss.len(),
        exhaustive: ss.is_exhaustive(),
        total_frequency: total,
        mean_energy: mean,
        min_energy: min,
    };
    run.write_json("summary.json", &summary)?;
    run.finish("sample", args)?;
    Ok(summary)
}
