//! `feedrecall`: seeded scenario runs writing plot-ready CSV and JSON.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::Config;

#[derive(Debug, Parser)]
#[command(name = "feedrecall", version, about = "Learning from feeds with limited recall")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; defaults are used for anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Simulate receivers on Poisson feeds and compare with the analytic drift.
    Simulate,
    /// Analytic rates, influence and mislearning over a parameter grid.
    Sweep,
    /// Generate a counting-experiment dataset and estimate the interference.
    Experiment,
    /// Verify calibrated prices implement the symmetric bandwidth split.
    Pricing,
    /// Learning diagnostics for a growing population under a bandwidth cap.
    Bandwidth,
}

/// Invalid configuration or parameters.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let go = || match cli.command {
        Command::Simulate => commands::simulate::run(&config, &cli.out),
        Command::Sweep => commands::sweep::run(&config, &cli.out),
        Command::Experiment => commands::experiment::run(&config, &cli.out),
        Command::Pricing => commands::pricing::run(&config, &cli.out),
        Command::Bandwidth => commands::bandwidth::run(&config, &cli.out),
    };
    match cli.threads {
        Some(0) => Err(ConfigError("--threads must be at least 1".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building thread pool")?
            .install(go),
        None => go(),
    }
}

/// 2 for configuration and domain errors, 3 for numeric or identification
/// failures, 1 for anything else (I/O).
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<feedrecall::Error>() {
            return match e {
                feedrecall::Error::Numeric(_) | feedrecall::Error::Identifiability(_) => 3,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
