//! `dhlab`: command-line driver for the Dirac-harmonic-map laboratory.
//!
//! Four commands: `check` runs the built-in invariant suite, `solve`
//! drives the relaxation solvers from a JSON config, `bubble` runs the
//! concentration experiments, and `conserve` runs the conservation-law
//! chain on saved field snapshots.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 config
//! error, 3 solver divergence, 4 unsupported topology for a requested
//! step. Identical config + seed always produces byte-identical CSVs.

mod checks;
mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_TOPOLOGY: u8 = 4;

/// Command error carrying the process exit code.
#[derive(Debug)]
pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    pub fn config(message: impl Into<String>) -> CmdError {
        CmdError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn failure(message: impl Into<String>) -> CmdError {
        CmdError {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl From<dhlab_core::DhError> for CmdError {
    fn from(e: dhlab_core::DhError) -> CmdError {
        let code = match e {
            dhlab_core::DhError::Diverged { .. } => EXIT_DIVERGED,
            dhlab_core::DhError::UnsupportedTopology => EXIT_TOPOLOGY,
            _ => EXIT_FAILURE,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

#[derive(Parser)]
#[command(name = "dhlab", version, about = "Dirac-harmonic-map laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite (algebra, identities, conservation).
    Check {
        /// Emit machine-readable results instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run a relaxation solve or vanishing probe from a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing); default `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a bubble/concentration experiment from a config file.
    Bubble {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the conservation-law chain on saved snapshots.
    Conserve {
        /// Snapshot files, coarsest to finest for refinement studies.
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Also solve for the Frobenius potential and report the
        /// Wente-form residual (torus snapshots only).
        #[arg(long)]
        wente: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { json } => checks::cmd_check(json),
        Command::Solve {
            config,
            out,
            json,
            seed,
        } => commands::cmd_solve(&config, out.as_deref(), json, seed),
        Command::Bubble { config, out, json } => {
            commands::cmd_bubble(&config, out.as_deref(), json)
        }
        Command::Conserve {
            snapshots,
            out,
            json,
            wente,
        } => commands::cmd_conserve(&snapshots, out.as_deref(), json, wente),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dhlab: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
