use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smoothfix::cli::{self, RunOptions, ENV_WORKERS};

#[derive(Parser)]
#[command(name = "smoothfix", version, about = "Fixed points of smoothing transforms")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario config and write report.json plus CSVs.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = ENV_WORKERS)]
        workers: Option<usize>,
    },
    /// Compare two sample CSVs.
    Report { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Cmd::Run { config, seed, out, workers } => cli::run(&config, &RunOptions { seed, out, workers }),
        Cmd::Report { a, b } => cli::report(&a, &b),
    };
    ExitCode::from(code as u8)
}
