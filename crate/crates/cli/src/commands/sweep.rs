use std::path::PathBuf;

use clap::Args;
use qbm_core::metrics::{dkl_optimum, sweep_beta};
use serde::Serialize;

use crate::error::CliResult;
use crate::inputs::{parse_grid, resolve_dataset, ModelArgs};
use crate::manifest::Run;

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: ModelArgs,
    /// Dataset for D_KL and conditionals; without it only state probabilities are reported.
    #[arg(long)]
    pub dataset: Option<String>,
    /// lo:hi:n, optionally suffixed :log (default) or :lin.
    #[arg(long, default_value = "0.1:10:40")]
    pub beta_grid: String,
    #[arg(long, default_value = "out/sweep")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    /// Grid point with the smallest D_KL.
    pub grid_argmin: Option<f64>,
    /// Continuous minimiser and its D_KL.
    pub optimum_beta: Option<f64>,
    pub optimum_dkl: Option<f64>,
}

pub fn run(args: &SweepArgs) -> CliResult<SweepSummary> {
    let mut run = Run::create(&args.out_dir)?;
    let bm = args.source.load(&mut run)?;
    let dataset = args.dataset.as_deref().map(|d| resolve_dataset(d, &mut run)).transpose()?;
    let grid = parse_grid(&args.beta_grid)?;
    let sweep = sweep_beta(&bm, dataset.as_ref(), grid.values())?;
    let mut csv = Vec::new();
    sweep.write_csv(&mut csv)?;
    run.write_bytes("sweep.csv", &csv)?;

    let optimum = dataset.as_ref().map(|d| dkl_optimum(&bm, d, grid.values())).transpose()?;
    let summary = SweepSummary {
        points: sweep.rows.len(),
        grid_argmin: sweep.argmin_dkl().map(|r| r.beta),
        optimum_beta: optimum.map(|o| o.0),
        optimum_dkl: optimum.map(|o| o.1),
    };
    run.write_json("summary.json", &summary)?;
    run.finish("sweep-beta", args)?;
    Ok(summary)
}
