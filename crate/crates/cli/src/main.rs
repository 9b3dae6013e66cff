//! `aigwave`: train operator-sequence policies, design common sequences,
//! apply them to circuits and regenerate the study reports.
//!
//! Exit codes: 0 success, 1 operational failure, 2 usage error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{Overrides, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aigwave", version, about = "Logic-synthesis operator sequences learned by policy gradient")]
struct Cli {
    /// TOML file with any of the flag values; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Overrides,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy on the manifest's train split
    Train,
    /// Sample candidate sequences from a checkpoint and keep the best
    Design {
        /// Policy checkpoint written by `train`
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Apply a sequence to circuits and write the optimized graphs
    Optimize {
        /// Sequence file, one operator per line
        #[arg(long, conflicts_with = "resyn2", required_unless_present = "resyn2")]
        sequence: Option<PathBuf>,
        /// Use the built-in resyn2 script
        #[arg(long)]
        resyn2: bool,
        /// Circuits to optimize, in addition to every manifest entry
        circuits: Vec<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run one study: distribution, permutation, ablation or extended
    Report {
        study: String,
        /// Trained policy for the distribution and permutation studies
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Base sequence for the permutation study
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
    /// Print structural statistics as CSV
    Stats { circuits: Vec<PathBuf> },
    /// Convert a Verilog or AIGER file to AIGER (format from the extension)
    Import { input: PathBuf, output: PathBuf },
}

pub enum CliError {
    Usage(String),
    Failed(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Failed(e.into())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(cli.config.as_deref(), &cli.flags).map_err(CliError::Usage)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global().map_err(|e| CliError::Failed(e.into()))?;
    }
    match cli.cmd {
        Command::Train => commands::train(&cfg),
        Command::Design { checkpoint } => commands::design(&cfg, &checkpoint),
        Command::Optimize { sequence, resyn2: _, circuits, inject_fault } => commands::optimize(&cfg, sequence.as_deref(), &circuits, inject_fault),
        Command::Report { study, checkpoint, sequence } => commands::report(&cfg, &study, checkpoint.as_deref(), sequence.as_deref()),
        Command::Stats { circuits } => commands::stats(&cfg, &circuits),
        Command::Import { input, output } => commands::import(&input, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
