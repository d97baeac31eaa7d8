//! Batch experiment driver: fits models, sweeps contamination benchmarks,
//! evaluates influence grids and breakdown bounds, and dumps synthetic
//! datasets. Every command is deterministic given its seed; results land
//! as tidy CSV / JSON under the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

mod commands;

use clap::{Parser, Subcommand};

use commands::{bench, fit, influence, lbbp, specdist, synth, CliError};

#[derive(Parser)]
#[command(name = "modalpca", version, about = "Modal PCA experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit minor components on a CSV dataset or a synthetic scenario.
    Fit(fit::Args),
    /// Sweep outlier fraction or sample size against classical PCA.
    Bench(bench::Args),
    /// Influence-function norm over a grid of contamination points.
    Influence(influence::Args),
    /// Breakdown-point lower bound and the clean-vs-contaminated cosine
    /// table.
    Lbbp(lbbp::Args),
    /// Generate and write a synthetic dataset.
    Synth(synth::Args),
    /// Spectral distance between two basis CSV files.
    Specdist(specdist::Args),
}

fn main() {
    if let Ok(raw) = std::env::var("MODALPCA_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => {
                eprintln!("config error: MODALPCA_THREADS must be a positive integer, got {raw:?}");
                std::process::exit(2);
            }
        }
    }

    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Influence(args) => influence::run(args),
        Command::Lbbp(args) => lbbp::run(args),
        Command::Synth(args) => synth::run(args),
        Command::Specdist(args) => specdist::run(args),
    };
    match outcome {
        Ok(()) => {}
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            std::process::exit(3);
        }
    }
}
