//! `fastkm`: run the rotation and feasibility experiments, Lyapunov
//! diagnostics and operator self-checks from the command line.

mod args;
mod commands;
mod sidecar;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or parameter inequalities; exit 2.
    Usage(String),
    /// A self-check found violations; exit 1.
    Violation(String),
    /// I/O or numerical failure while running; exit 2.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Usage(_) | CliError::Runtime(_) => 2,
        }
    }
}

impl From<fastkm::Error> for CliError {
    fn from(e: fastkm::Error) -> Self {
        match e {
            fastkm::Error::InvalidParameter(_) | fastkm::Error::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Violation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rotation(a) => commands::rotation(a),
        Command::Feasibility(a) => commands::feasibility(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Check(a) => commands::check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
