//! Configuration, orchestration and file output for the `ffscale` tool.
//!
//! Each subcommand reads a JSON config (MHz/ns units), runs the matching
//! experiment from `ffscale-core` over a worker pool, and writes a CSV table
//! with a `<out>.meta.json` sidecar.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use experiments::Table;

#[derive(Debug, Parser)]
#[command(name = "ffscale", version, about = "Fast-forward displacement experiments for driven resonators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form ramp trajectory samples.
    Ramp(CommonArgs),
    /// Drive-amplitude ramp at fixed detuning, fast-forward vs reference.
    FfResonator(CommonArgs),
    /// Linear detuning ramp at fixed drive.
    LinDetuning(CommonArgs),
    /// Fast-forward with time scaling at fixed drive.
    FfTs(CommonArgs),
    /// Counter-diabatic drive check.
    CdCheck(CommonArgs),
    /// Coupler displacement between two Kerr parametric oscillators.
    KpoSweep(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// CSV output path; a `<PATH>.meta.json` sidecar is written next to it.
    /// Without it the CSV goes to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweep points.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
    /// Integrator tolerances.
    #[arg(long, value_name = "REL[,ABS]")]
    pub tol: Option<String>,
    /// Truncation override, repeatable (modes: resonator, kpo1, kpo2, coupler).
    #[arg(long = "dim-override", value_name = "MODE=N")]
    pub dim_override: Vec<String>,
}

impl Command {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Command::Ramp(_) => ExperimentKind::RampTrajectory,
            Command::FfResonator(_) => ExperimentKind::FfResonator,
            Command::LinDetuning(_) => ExperimentKind::LinDetuning,
            Command::FfTs(_) => ExperimentKind::FfTsResonator,
            Command::CdCheck(_) => ExperimentKind::CdCheck,
            Command::KpoSweep(_) => ExperimentKind::KpoSweep,
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Ramp(a)
            | Command::FfResonator(a)
            | Command::LinDetuning(a)
            | Command::FfTs(a)
            | Command::CdCheck(a)
            | Command::KpoSweep(a) => a,
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(kind: ExperimentKind, args: &CommonArgs) -> Result<ExperimentConfig> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => "{}".to_string(),
    };
    let mut config = parse_config(&text, Some(kind))?;
    if let Some(tol) = &args.tol {
        config.override_tol(tol)?;
    }
    for spec in &args.dim_override {
        config.override_dim(spec)?;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

pub fn run_config(config: &ExperimentConfig, jobs: usize) -> Result<Table> {
    if jobs == 0 {
        return Err(CliError::config("--jobs must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {jobs} workers: {e}")))?;
    experiments::run(config, &pool)
}

pub fn run(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    let config = resolve_config(cli.command.kind(), args)?;
    let table = run_config(&config, args.jobs)?;
    match &config.output {
        Some(out) => output::write_outputs(&config, &table, out),
        None => {
            let mut stdout = io::stdout().lock();
            output::write_csv(&table, &mut stdout)?;
            stdout.flush().map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
