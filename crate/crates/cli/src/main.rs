//! `indiff`: batch front-end for the indifference-pricing library.
//!
//! Exit codes: 0 success, 2 invalid configuration or model, 3 numerical
//! failure, 4 I/O error. Diagnostics go to standard error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "indiff", version, about = "Utility indifference prices under default risk")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `oracle.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output (info, debug).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check the market model and claim.
    Validate,
    /// One BSDE solve at `numerics.k`; surface CSV.
    Solve,
    /// k-sweep over `numerics.ks`, or doubling from `numerics.k0`; sweep CSV.
    Converge,
    /// Buying and selling prices; JSON report.
    Price,
    /// Brute-force tree and martingale check; drift CSV.
    Oracle,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] indiff_core::Error),
    #[error("io: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 4,
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = RunConfig::load(path)?;
    if let Command::Validate = args.command {
        return run::validate(&cfg);
    }
    let resolved = cfg.resolve(args.seed)?;
    log::info!("resolved numerics: {:?}", resolved.block);
    match args.command {
        Command::Validate => unreachable!(),
        Command::Solve => run::solve(&resolved),
        Command::Converge => run::converge_cmd(&resolved),
        Command::Price => run::price(&resolved),
        Command::Oracle => run::oracle(&resolved),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: config: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
