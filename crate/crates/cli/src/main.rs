//! `hypershift` command line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

const PRESET_HELP: &str = "Operator presets (use `hypershift presets` for details): \
cor22c, prop59, tu, geometric, eta-bilateral";

#[derive(Debug, Parser)]
#[command(name = "hypershift", version, about = "Gamma-scaled orbit experiments on sequence spaces", after_help = PRESET_HELP)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    globals: Globals,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Globals {
    /// TOML scenario file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for reports (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub horizon: Option<u64>,
    /// Seed for random draws.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Turn failed checks and truncated runs into non-zero exits.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density estimates of an index set file (one integer per line).
    Densities {
        set_file: Option<PathBuf>,
        /// Window length for the Banach density estimate.
        #[arg(long)]
        window: Option<u64>,
    },
    /// Generate a separated schedule family.
    Schedules {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        base_density: Option<f64>,
    },
    /// Evaluate the three criterion conditions for a scalar sequence.
    Criterion,
    /// Build a vector whose scaled orbit follows the schedules.
    Construct,
    /// Record visits of a scaled orbit to epsilon-balls.
    Orbit,
    /// Diagnostics of a scalar set and weight series.
    Gamma,
    /// List the operator presets.
    Presets,
}

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Run = Result<(), Failure>;

pub trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| {
            let error = e.into();
            let code = match error.downcast_ref::<hypershift::Error>() {
                Some(core) => core_code(core, code),
                None => code,
            };
            Failure { code, error }
        })
    }
}

/// Exit codes: 2 input, 3 schedules, 4 criterion, 5 construction, 6 truncation.
fn core_code(e: &hypershift::Error, default: u8) -> u8 {
    use hypershift::Error as E;
    match e {
        E::Parse { .. } => 2,
        E::ScheduleGeneration { .. } => 3,
        E::ConstructionFailure { .. } => 5,
        E::NumericRange(_) | E::TruncationBudget(_) => 6,
        _ => default,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.globals;
    let result = match cli.command {
        Command::Densities { set_file, window } => commands::densities(g, set_file, window),
        Command::Schedules { k, base_density } => commands::schedules(g, k, base_density),
        Command::Criterion => commands::criterion(g),
        Command::Construct => commands::construct(g),
        Command::Orbit => commands::orbit(g),
        Command::Gamma => commands::gamma(g),
        Command::Presets => commands::presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
