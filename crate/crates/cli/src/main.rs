//! `tsvft` command-line front end.

mod bench;
mod commands;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::io::CliError;

#[derive(Parser)]
#[command(name = "tsvft", version, about = "Adaptive TSV fault-tolerance structures and yield-driven planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Disjoint replacing-path counts and the group tolerance K.
    Ktol(commands::KtolArgs),
    /// Generate a K-fault tolerance structure.
    Gen(commands::GenArgs),
    /// Plan groups and spares for a chip instance.
    Plan(commands::PlanArgs),
    /// Check a structure against its relation graph.
    Verify(commands::VerifyArgs),
    /// Inject f-TSV faults into a structure and count the repairable sets.
    Inject(commands::InjectArgs),
    /// Write a synthetic planning instance.
    Synth(commands::SynthArgs),
    /// Compare planning modes over a seeded synthetic suite.
    Bench(bench::BenchArgs),
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TSVFT_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| CliError::Parse(format!("TSVFT_WORKERS={raw} is not a worker count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(e.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = configure_workers().and_then(|()| match cli.command {
        Command::Ktol(a) => commands::ktol(a),
        Command::Gen(a) => commands::gen(a),
        Command::Plan(a) => commands::plan(a),
        Command::Verify(a) => commands::verify(a),
        Command::Inject(a) => commands::inject(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => bench::run(a),
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
