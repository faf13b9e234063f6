//! Experiment runner for the twist-map variational library.
//!
//! One process runs one command described by a JSON configuration
//! file and writes machine-readable results (JSON or CSV) plus a run
//! manifest for reproducibility. Batch experiments are shell loops
//! over configs. See `config.rs` for the configuration schema and
//! `run.rs` for the file and exit-code contract.
//!
//! Exit codes: 0 success, 2 validation failure (bad config, bad
//! parameters, I/O), 3 solver non-convergence, 4 hypothesis-check
//! failure, 5 mathematical precondition not met (e.g. no certified
//! gap interval).

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Command-line flags. Everything substantive lives in the JSON
/// config; flags select the file and override its output destination
/// and runtime knobs.
#[derive(Debug, Parser)]
#[command(
    name = "twistvar",
    version,
    about = "Run one twist-map variational experiment from a JSON config"
)]
pub struct Cli {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,

    /// Primary result path (overrides the config's `output.path`).
    /// The run manifest and any per-site CSV are written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Result format (overrides the config's `output.format`).
    #[arg(long, value_enum)]
    pub format: Option<config::Format>,

    /// Worker threads for operations that declare independent work
    /// (gap fibers, distinctness schedules). Output order is
    /// deterministic regardless of thread count.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,

    /// Tolerance override: solver gradient tolerance, and the
    /// residual threshold of the map-iterate and rational
    /// verification checks.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Recorded in the run manifest for provenance. The solvers are
    /// deterministic and tie-break without randomness, so the seed
    /// does not affect results.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
