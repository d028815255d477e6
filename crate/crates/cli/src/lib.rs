//! The `etpa` command line: config parsing and subcommand orchestration.
//!
//! [`execute`] runs a command line in-process and returns the exit code and
//! standard output; the binary is a thin wrapper around it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
pub mod config;

pub use commands::spectrum_file_name;
use config::RunConfig;

/// Entangled two-photon absorption: response maps, source spectra,
/// temperature sweeps and cross-section fits.
#[derive(Debug, Parser)]
#[command(name = "etpa", version)]
pub struct Cli {
    /// TOML run configuration; built-in reference setup if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-photon response map |L(λi, λs)|.
    Response,
    /// Single-photon spectra of the source.
    Spectrum(TempsArg),
    /// Probability against crystal temperature.
    Sweep {
        /// Move the optimum to the vertex of a parabola through its neighbours.
        #[arg(long)]
        refine: bool,
        /// Repeat the sweep on a doubled grid and report the largest change.
        #[arg(long)]
        convergence_check: bool,
    },
    /// Absorption slopes and cross sections from rate files.
    Fit {
        /// One CSV per crystal temperature (`r_solv_cps,r_samp_cps[,pump_power_mw]`).
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        temps: TempsArg,
        #[arg(long)]
        through_origin: bool,
    },
    /// Power-law exponent of a two-column (power, rate) file.
    Power { file: PathBuf },
}

#[derive(Debug, Args)]
struct TempsArg {
    /// Comma-separated crystal temperatures in °C.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    temps: Option<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Runs a parsed command line and returns what it prints on stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let setup = config.setup(cli.out.as_deref())?;
    let mut stdout = String::new();
    match cli.command {
        Command::Response => commands::response(&setup, &mut stdout),
        Command::Spectrum(t) => commands::spectrum(&setup, t.temps.as_deref(), &mut stdout),
        Command::Sweep {
            refine,
            convergence_check,
        } => commands::sweep(&setup, refine, convergence_check, &mut stdout),
        Command::Fit {
            files,
            temps,
            through_origin,
        } => commands::fit(
            &setup,
            &files,
            temps.temps.as_deref(),
            through_origin,
            &mut stdout,
        ),
        Command::Power { file } => commands::power(&file, &mut stdout),
    }?;
    Ok(stdout)
}

/// Result of [`execute`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub code: u8,
    pub stdout: String,
    pub error: Option<String>,
}

/// Parses and runs `args` (including the program name) in-process.
pub fn execute<I, T>(args: I) -> Execution
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return Execution {
                code: e.exit_code() as u8,
                stdout: String::new(),
                error: Some(e.render().to_string()),
            }
        }
    };
    match run(cli) {
        Ok(stdout) => Execution {
            code: 0,
            stdout,
            error: None,
        },
        Err(e) => Execution {
            code: e.exit_code(),
            stdout: String::new(),
            error: Some(e.to_string()),
        },
    }
}
