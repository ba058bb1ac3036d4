//! `phasecov`: simulate phase-covariant qubit dynamics from a TOML run file.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phasecov::evolution::EvolutionError;
use phasecov::indicators::IndicatorError;
use phasecov::rates::RateError;
use phasecov::Execution;

use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "phasecov", version, about)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Treat non-completely-positive maps as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads for parallel evaluation (1 runs sequentially).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Evolve the probe states and write trajectory and indicator CSVs.
    Trajectory,
    /// Report the dynamics class and applicable indicators.
    Classify,
    /// Sweep the (γ′, γ₃) plane and write condition membership.
    Regions,
    /// Run the cross-checks between map, ODE, conditions and indicators.
    Verify,
    /// Tabulate the minimum Choi eigenvalue along the grid.
    CpCheck,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Io(String),
    Model(String),
    Physical(String),
    Mismatch(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Model(_) => 2,
            CliError::Physical(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Model(m) => write!(f, "model evaluation failed: {m}"),
            CliError::Physical(m) => write!(f, "physicality check failed: {m}"),
            CliError::Mismatch(m) => write!(f, "cross-check mismatch: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::InvalidParameter { name, .. } => {
                CliError::Config(ConfigError(format!("invalid `model.{name}`: {e}")))
            }
            other => CliError::Model(other.to_string()),
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::Rate(r) => r.into(),
            EvolutionError::StepTooLarge { .. } | EvolutionError::Grid(_) => {
                CliError::Config(ConfigError(format!("invalid `time.steps`: {e}")))
            }
            EvolutionError::NonPhysical { .. } => CliError::Physical(e.to_string()),
            EvolutionError::KappaOutOfRange(_) => {
                CliError::Config(ConfigError(format!("invalid `class_override.kappa`: {e}")))
            }
            EvolutionError::OdeDiverged { .. } => CliError::Model(e.to_string()),
        }
    }
}

impl From<IndicatorError> for CliError {
    fn from(e: IndicatorError) -> Self {
        match e {
            IndicatorError::Evolution(e) => e.into(),
            IndicatorError::State(s) => {
                CliError::Config(ConfigError(format!("invalid `probes`: {s}")))
            }
            other => CliError::Model(other.to_string()),
        }
    }
}

/// Everything a command needs besides its own config section.
pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub exec: Execution,
}

fn setup(cli: &Cli) -> Result<Context, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("missing required option --config <PATH>".into()))?;
    let config = RunConfig::load(path)?;
    let exec = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(1) => Execution::Sequential,
        Some(_n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(_n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| config.outputs.directory.clone());
    Ok(Context {
        config,
        out_dir,
        strict: cli.strict,
        exec,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = setup(&cli)?;
    match cli.command {
        Command::Trajectory => commands::trajectory(&ctx),
        Command::Classify => commands::classify(&ctx),
        Command::Regions => commands::regions(&ctx),
        Command::Verify => commands::verify(&ctx),
        Command::CpCheck => commands::cp_check(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
