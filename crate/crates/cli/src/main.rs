mod config;
mod linear;
mod manifest;
mod outdir;
mod simulate;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use filmheat::ThermalModel;

/// Heat transfer across wavy falling films: linear spectra, single runs and
/// parameter sweeps of reduced thermal models against a Fourier reference.
#[derive(Debug, Parser)]
#[command(name = "filmheat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Damping rates (3 Pe Re λ) of flat-film temperature perturbations.
    Linear(LinearArgs),
    /// One time-dependent simulation into a run directory.
    Simulate(SimulateArgs),
    /// Latin-hypercube sweep over (Pe, Bi) producing an error map.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    /// Bi·h values: `a`, `a,b,c`, `start:stop:count` or `start:stop:count:log`.
    #[arg(long, default_value = "0")]
    pub bih: String,
    /// Wavenumbers, same syntax as --bih.
    #[arg(long, default_value = "0")]
    pub k: String,
    /// Exact modes per row.
    #[arg(long, default_value_t = 3)]
    pub modes: usize,
    /// Write `linear.tsv` into this directory instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated thermal models (theta, theta-phi, scheid, lin).
    #[arg(long)]
    pub models: Option<String>,
    /// Integrate the Fourier reference (true/false).
    #[arg(long, action = ArgAction::Set)]
    pub reference: Option<bool>,
    /// Replace an existing output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DomainArg {
    Periodic,
    Open,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub models: Option<String>,
    /// Use the default domain of this kind when the config has the other.
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    /// Replace an existing output directory.
    #[arg(long, conflicts_with = "resume")]
    pub force: bool,
    /// Continue an interrupted sweep in an existing directory.
    #[arg(long)]
    pub resume: bool,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or config: exit 2.
    Usage(String),
    /// The run itself failed: exit 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<filmheat::FilmError> for Failure {
    fn from(e: filmheat::FilmError) -> Self {
        Failure::Runtime(e.into())
    }
}

pub fn parse_models(list: &str) -> Result<Vec<ThermalModel>, Failure> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.parse::<ThermalModel>()
                .map_err(|e| Failure::Usage(e.to_string()))
        })
        .collect()
}

/// Reads, overrides and validates a config; every problem is reported.
pub fn load_config(path: Option<&PathBuf>) -> Result<config::Config, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    config::Config::parse(&text).map_err(issues_to_usage)
}

pub fn issues_to_usage(issues: Vec<config::Issue>) -> Failure {
    let lines: Vec<String> = issues.iter().map(|i| format!("  {i}")).collect();
    Failure::Usage(format!("invalid config:\n{}", lines.join("\n")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Linear(a) => linear::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Sweep(a) => sweep::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
