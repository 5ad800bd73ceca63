use std::io::Write;

use clap::Args;
use qbm_core::samplers::mock::{MockConfig, MockFault, MockServer};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    /// Listen address; port 0 picks a free port.
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub addr: String,
    /// Server-side inverse temperature.
    #[arg(long, default_value_t = 3.0)]
    pub beta: f64,
    /// Size drift: effective beta is beta / (1 + drift * nodes).
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Larger problems are refused with HTTP 413.
    #[arg(long, default_value_t = 20)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inject a fault: truncated-samples, garbage or server-error.
    #[arg(long)]
    pub fault: Option<String>,
}

fn parse_fault(s: &str) -> CliResult<MockFault> {
    match s {
        "truncated-samples" => Ok(MockFault::TruncatedSamples),
        "garbage" => Ok(MockFault::Garbage),
        "server-error" => Ok(MockFault::ServerError),
        other => Err(CliError::input(format!("unknown fault `{other}`"))),
    }
}

/// Prints `{"url": ...}` on one line once listening, then serves until killed.
pub fn run(args: &ServeArgs) -> CliResult<()> {
    let config = MockConfig {
        beta: args.beta,
        drift: args.drift,
        max_nodes: args.max_nodes,
        seed: args.seed,
        fault: args.fault.as_deref().map(parse_fault).transpose()?,
    };
    let server = MockServer::start(&args.addr, config)?;
    let mut out = std::io::stdout();
    writeln!(out, "{}", serde_json::json!({ "url": server.url() })).map_err(|e| CliError::internal(e.to_string()))?;
    out.flush().map_err(|e| CliError::internal(e.to_string()))?;
    server.join();
    Ok(())
}
