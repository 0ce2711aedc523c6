//! `screenwave <command> --config <path> [--threads N] [--out DIR]`
//!
//! Exit codes: 0 all checks pass, 1 configuration or IO error, 2 checks ran
//! with failures, 3 numerical failure.

mod commands;
mod config;
mod output;

use clap::Parser;
use config::{Command, RunConfig};
use screenwave::diagnostics::Verdict;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Library(#[from] screenwave::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(e) if e.is_numerical() => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "screenwave", version, about = "Scattering by planar screens and apertures, with wavenumber-explicit checks")]
struct Args {
    /// Pipeline to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; falls back to SCREENWAVE_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SCREENWAVE_THREADS") {
            Ok(v) => {
                Some(v.trim().parse().map_err(|_| CliError::Config(format!("SCREENWAVE_THREADS must be a positive integer, got {v:?}")))?)
            }
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(CliError::Config("thread count must be positive".into()));
    }
    Ok(n)
}

fn run(args: &Args) -> Result<bool, CliError> {
    if let Some(n) = thread_count(args.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RunConfig::parse(&text)?;
    if let Some(c) = cfg.command {
        if c != args.command {
            return Err(CliError::Config(format!("config is for `{}`, not `{}`", c.name(), args.command.name())));
        }
    }
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    let mut out = output::Writer::new(&args.out, args.command.name(), hash, cfg.seed)?;
    let checks = commands::run(args.command, &cfg, &mut out)?;
    for c in &checks {
        println!("[{}] {}: {}", c.verdict.as_str().to_uppercase(), c.name, c.detail);
    }
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    Ok(checks.iter().all(|c| c.verdict != Verdict::Fail))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
