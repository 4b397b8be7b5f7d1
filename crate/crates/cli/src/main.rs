//! `ncbm`: simulate noncolliding Brownian motions, evaluate their densities and
//! run the verification suites.

mod density;
mod settings;
mod simulate;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] noncolliding::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(name = "ncbm", version, about = "Noncolliding Brownian motion: sampling, densities and verification")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Master seed (default: $NCBM_SEED, else a random seed that is echoed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trajectories of an SDE or a matrix-valued process and write CSV.
    Simulate(simulate::SimulateArgs),
    /// Evaluate a density or survival probability on a list of points.
    Density(density::DensityArgs),
    /// Run a verification suite and write a JSON report; exit 1 unless green.
    Verify(verify::VerifyArgs),
}

/// Implements `FromStr`/`Display` for a `ValueEnum` so it can also come from
/// the config file.
macro_rules! config_enum {
    ($t:ty) => {
        impl std::str::FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as clap::ValueEnum>::from_str(s, true)
            }
        }
        impl std::fmt::Display for $t {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                let v = clap::ValueEnum::to_possible_value(self).expect("no skipped variants");
                f.write_str(v.get_name())
            }
        }
    };
}
pub(crate) use config_enum;

/// A `;`-separated list of points, each a `,`-separated vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PointList(pub Vec<String>);

impl FromStr for PointList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let items: Vec<String> = s.split(';').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
        if items.is_empty() {
            Err("empty point list".into())
        } else {
            Ok(Self(items))
        }
    }
}

impl fmt::Display for PointList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

impl PointList {
    fn from_flags(v: Vec<String>) -> Option<Self> {
        if v.is_empty() {
            None
        } else {
            Some(Self(v))
        }
    }
}

/// Output path setting.
#[derive(Debug, Clone, PartialEq)]
pub struct OutPath(pub PathBuf);

impl FromStr for OutPath {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(Self(PathBuf::from(s)))
    }
}

impl fmt::Display for OutPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.display())
    }
}

fn configure_threads(settings: &mut Settings, flag: Option<usize>) -> Result<(), CliError> {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = settings.value("threads", flag, default)?;
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    configure_threads(&mut settings, cli.threads)?;
    match cli.command {
        Command::Simulate(args) => simulate::run(args, cli.seed, settings),
        Command::Density(args) => {
            if cli.seed.is_some() {
                return Err(CliError::Usage("density evaluation is deterministic and takes no --seed".into()));
            }
            density::run(args, settings)
        }
        Command::Verify(args) => verify::run(args, cli.seed, settings),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ncbm: error: {e}");
            ExitCode::from(2)
        }
    }
}
