//! Command-line front end: config resolution, subcommands and artifact I/O.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_file, ConfigFile, Format, Mode, Overrides, Preset, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lambdaflow",
    version,
    about = "Transient energy flow in a Λ system between two memory baths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients, populations, currents and flow regimes on a time grid.
    Simulate(CommonArgs),
    /// First unidirectional-flow duration over a two-parameter grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Built-in grid used for axes not given in the config file.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Forward geometry against the geometry with γ₁ and γ₂ exchanged.
    Diode(CommonArgs),
    /// Ensemble of stochastic wavefunctions compared with the deterministic result.
    Stochastic(CommonArgs),
    /// Oracle, trace/flux and equal-memory checks; exits 1 if any fails.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub coupling1: Option<f64>,
    #[arg(long)]
    pub coupling2: Option<f64>,
    /// Final time in units of 1/ω.
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub dt_out: Option<f64>,
    /// Dead band around zero for Re F.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Shortest interval kept by the detector.
    #[arg(long)]
    pub min_len: Option<f64>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every hardware thread.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Main output file; sidecars are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self, preset: Option<Preset>) -> Overrides {
        Overrides {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            coupling1: self.coupling1,
            coupling2: self.coupling2,
            t_max: self.tmax,
            dt_out: self.dt_out,
            eps: self.eps,
            min_len: self.min_len,
            n_traj: self.n_traj,
            seed: self.seed,
            workers: self.workers,
            output: self.out.clone(),
            format: self.format,
            preset,
        }
    }
}

impl Command {
    fn parts(&self) -> (Mode, &CommonArgs, Option<Preset>) {
        match self {
            Command::Simulate(a) => (Mode::Simulate, a, None),
            Command::Sweep { common, preset } => (Mode::Sweep, common, *preset),
            Command::Diode(a) => (Mode::Diode, a, None),
            Command::Stochastic(a) => (Mode::Stochastic, a, None),
            Command::Validate(a) => (Mode::Validate, a, None),
        }
    }

    /// Resolve defaults, the optional config file and flags into one config.
    pub fn resolve(&self) -> Result<RunConfig> {
        let (mode, args, preset) = self.parts();
        let file = match &args.config {
            Some(path) => parse_file(&output::read_text(path)?).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?,
            None => ConfigFile::default(),
        };
        RunConfig::resolve(mode, file, &args.overrides(preset))
    }
}
