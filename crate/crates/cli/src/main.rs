//! `qbm`: train Boltzmann machines, analyse their temperature dependence
//! and drive samplers from the command line.
//!
//! Every command writes its artifacts plus a `manifest.json` into
//! `--out-dir` and prints a JSON summary on stdout. Failures print
//! `{"error": {...}}` on stderr and exit with 1 (internal), 2 (usage or
//! input) or 3 (transport).

mod commands;
mod error;
mod inputs;
mod manifest;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{fit, reproduce, sample, serve, sweep, train, verify};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qbm", version, about = "Boltzmann machine training with pluggable samplers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train with one or more seeded restarts and keep the best model.
    Train(train::TrainArgs),
    /// Tabulate D_KL, state probabilities and conditionals over beta.
    SweepBeta(sweep::SweepArgs),
    /// Estimate the beta a sampler realises, by Hellinger distance.
    FitBeta(fit::FitArgs),
    /// Check the temperature monotonicity statements on random machines.
    VerifyPropositions(verify::VerifyArgs),
    /// Draw samples from a model with any backend.
    Sample(sample::SampleArgs),
    /// Run the mock annealer service in the foreground.
    ServeMock(serve::ServeArgs),
    /// Run the whole experiment pipeline.
    Reproduce(reproduce::ReproduceArgs),
}

fn emit(value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    // A closed pipe (e.g. `| head`) is not a failure; artifacts are already on disk.
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(())
}

fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Train(a) => emit(&train::run(a)?),
        Command::SweepBeta(a) => emit(&sweep::run(a)?),
        Command::FitBeta(a) => emit(&fit::run(a)?),
        Command::VerifyPropositions(a) => {
            let report = verify::run(a)?;
            emit(&serde_json::json!({
                "machines": report.machines,
                "passed": report.passed,
                "failed": report.failed,
                "non_strict": report.non_strict,
                "counterexamples": report.counterexamples,
            }))
        }
        Command::Sample(a) => emit(&sample::run(a)?),
        Command::ServeMock(a) => serve::run(a),
        Command::Reproduce(a) => emit(&reproduce::run(a)?),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.kind.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::input(e.render().to_string().trim_end())),
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
