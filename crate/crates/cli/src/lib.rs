//! Command-line front end for `wiretap-core`.
//!
//! Every command prints a JSON object `{"manifest": ..., "result": ...}`
//! with floats rounded to 12 significant digits. Exit codes: 0 success,
//! 2 input error, 3 numerical non-convergence, 4 budget exceeded.

pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use wiretap_core::info_theory::{BA_DEFAULT_MAX_ITER, BA_DEFAULT_TOL};
use wiretap_core::ErrorKind;

use commands::{CaseArg, HalfDuplexQuery, SecrecyMode};
use output::{to_pretty_json, Envelope, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] wiretap_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => EXIT_INPUT,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Budget => EXIT_BUDGET,
            },
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wiretap", version, about = "Secrecy rates and feedback-scheme simulation for wiretap channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity of the main channel (feedback does not change it).
    Capacity {
        channel_file: PathBuf,
        #[arg(long, default_value_t = BA_DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = BA_DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Secrecy rates without feedback, with public discussion, or with full-duplex feedback.
    Secrecy {
        channel_file: PathBuf,
        #[arg(long, value_enum)]
        mode: SecrecyMode,
        /// Grid steps per simplex coordinate.
        #[arg(long, default_value_t = 32)]
        grid: usize,
    },
    /// Half-duplex rate at a point or optimised over (mu, t).
    Halfduplex {
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, requires = "t", conflicts_with = "optimize")]
        mu: Option<f64>,
        #[arg(long, requires = "mu", conflicts_with = "optimize")]
        t: Option<f64>,
        #[arg(long)]
        optimize: bool,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1e-12)]
        refine_tol: f64,
    },
    /// Monte Carlo run of a feedback scheme; writes <out>.json and <out>.csv.
    Simulate {
        /// Simulation config, or a previous report to re-run from its manifest.
        config_file: PathBuf,
        #[arg(long, default_value = "sim_report")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, env = "WIRETAP_SEED")]
        seed: Option<u64>,
    },
    /// Entropy of the wrapped main-channel noise and the mod-lattice secrecy capacity.
    Lattice { lattice_file: PathBuf },
    /// Compare schemes on a BSC wiretap channel.
    Compare {
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, default_value_t = 64)]
        hd_grid: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn envelope(command: &str, (result, params): (serde_json::Value, commands::Params), seed: u64) -> Result<String, CliError> {
    Ok(to_pretty_json(&Envelope {
        manifest: RunManifest::new(command, params, seed),
        result,
    })?)
}

/// Executes a parsed command and returns what goes to stdout.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Capacity {
            channel_file,
            tol,
            max_iter,
        } => envelope("capacity", commands::capacity(&channel_file, tol, max_iter)?, 0),
        Command::Secrecy {
            channel_file,
            mode,
            grid,
        } => envelope("secrecy", commands::secrecy(&channel_file, mode, grid)?, 0),
        Command::Halfduplex {
            eps,
            delta,
            mu,
            t,
            optimize,
            grid,
            refine_tol,
        } => {
            let q = match (optimize, mu, t) {
                (true, _, _) => HalfDuplexQuery::Optimize { grid, refine_tol },
                (false, Some(mu), Some(t)) => HalfDuplexQuery::Point { mu, t },
                _ => return Err(CliError::Input("give --mu and --t, or --optimize".into())),
            };
            envelope("halfduplex", commands::halfduplex(eps, delta, q)?, 0)
        }
        Command::Simulate {
            config_file,
            out,
            threads,
            seed,
        } => {
            let cfg = commands::load_sim_config(&config_file)?;
            let (_, text) = commands::simulate(cfg, seed, threads, &out)?;
            Ok(text)
        }
        Command::Lattice { lattice_file } => envelope("lattice", commands::lattice(&lattice_file)?, 0),
        Command::Compare {
            eps,
            delta,
            case,
            grid,
            hd_grid,
            format,
        } => match format {
            Format::Json => envelope("compare", commands::compare(eps, delta, case, grid, hd_grid)?, 0),
            Format::Csv => commands::compare_csv(&commands::compare_row(eps, delta, case, grid, hd_grid)?),
        },
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
