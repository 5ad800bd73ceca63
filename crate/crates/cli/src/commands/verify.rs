use std::path::PathBuf;

use clap::Args;
use qbm_core::ising::ModelFile;
use qbm_core::metrics::propositions::{verify_ensemble, EnsembleReport};
use serde::Serialize;

use crate::error::CliResult;
use crate::inputs::parse_grid;
use crate::manifest::Run;

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Number of random complete machines.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Machines have 2 to this many nodes.
    #[arg(long, default_value_t = 8)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add one machine whose states are all ground states.
    #[arg(long)]
    pub include_flat: bool,
    #[arg(long, default_value = "0.1:10:40")]
    pub beta_grid: String,
    #[arg(long, default_value = "out/propositions")]
    pub out_dir: PathBuf,
}

/// Failing machines are written as model files next to the report; a
/// failure is report content, not an error.
pub fn run(args: &VerifyArgs) -> CliResult<EnsembleReport> {
    let mut run = Run::create(&args.out_dir)?;
    run.add_seed(args.seed);
    let grid = parse_grid(&args.beta_grid)?;
    let (report, machines) = verify_ensemble(args.count, args.max_nodes, args.seed, grid.values(), args.include_flat)?;
    for &i in &report.counterexamples {
        let text = ModelFile::from_machine(&machines[i]).to_json()?;
        run.write_bytes(&format!("counterexample_{i}.json"), (text + "\n").as_bytes())?;
    }
    run.write_json("propositions.json", &report)?;
    run.finish("verify-propositions", args)?;
    Ok(report)
}
