//! The `lrinv` command line: configuration ingestion, dispatch and result
//! files.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 integration
//! failure, 4 I/O failure, 5 verification failure.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    classification_report, run_classify, run_iec, run_nmr, run_solve, run_sweep, run_verify, solve_core,
    ClassificationReport, IecReport, NmrReport, SolveRun, SolveSummary, SweepRow, VerifyReport,
};
pub use config::{BlockSelection, RunConfig};

use crate::engine::EngineError;
use crate::expr::EvalError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LRINV_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at '{pointer}': {message}")]
    Config { pointer: String, message: String },
    #[error("integration failed{}: {message}", .t.map(|t| format!(" at t = {t}")).unwrap_or_default())]
    Integration { t: Option<f64>, message: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Integration { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Verification(_) => 5,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Integration { t, reason } => CliError::Integration { t: Some(t), message: reason },
            EngineError::Eval(_)
            | EngineError::Degeneracy { .. }
            | EngineError::Singularity { .. } => CliError::Integration {
                t: e.time(),
                message: e.to_string(),
            },
            other => CliError::config("", other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Integration {
            t: Some(e.t),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lrinv", version, about = "Dynamical invariants of two-qubit Hamiltonians")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Pass/fail tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid steps, overriding the configuration.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Subalgebra label, sector blocks, S/D generator sets and su(3) check.
    Classify,
    /// Solve the adjoint equation and write the requested outputs.
    Solve,
    /// Recompute residuals of an externally supplied trajectory.
    Verify {
        /// CSV with columns t, g_1..g_n.
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Closed-form NMR invariant checked against the oracle.
    Nmr,
    /// Inverse-engineered two-level inversion.
    Iec,
    /// Repeat a solve over values of one constant coefficient.
    Sweep {
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
    },
}

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    pub tol: Option<f64>,
    pub steps: Option<usize>,
    pub jobs: Option<usize>,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Err(CliError::config("", "--config is required for this command")),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ctx = Context {
        out_dir: cli.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        tol: cli.tol,
        steps: cli.steps,
        jobs: cli.jobs,
    };
    match cli.command {
        Command::Classify => run_classify(&load_config(&cli.config)?, &ctx).map(|_| ()),
        Command::Solve => run_solve(&load_config(&cli.config)?, &ctx).map(|_| ()),
        Command::Verify { trajectory } => run_verify(&load_config(&cli.config)?, &trajectory, &ctx).map(|_| ()),
        Command::Nmr => run_nmr(&load_config(&cli.config)?, &ctx).map(|_| ()),
        Command::Iec => {
            let cfg = match &cli.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::parse_str("{}")?,
            };
            run_iec(&cfg, &ctx).map(|_| ())
        }
        Command::Sweep { parameter, values } => {
            run_sweep(&load_config(&cli.config)?, parameter.as_deref(), values.as_deref(), &ctx).map(|_| ())
        }
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
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
