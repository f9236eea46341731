//! `phasewit` command-line front end.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes and their exit statuses.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input files.
    Config(String),
    /// The library rejected the request (e.g. an ordering outside the valid regime).
    Domain(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Domain(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Domain(m) => m,
        }
    }
}

impl From<phasewit_core::Error> for Failure {
    fn from(e: phasewit_core::Error) -> Self {
        match e {
            phasewit_core::Error::Contract(_) => Failure::Config(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Witness(a) => commands::witness(a),
        Command::GaussianScan(a) => commands::gaussian_scan(a),
        Command::FockLossScan(a) => commands::fock_loss_scan(a),
        Command::Qng(a) => commands::qng(a),
        Command::DetectorSim(a) => commands::detector_sim(a),
        Command::Recover(a) => commands::recover(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("phasewit: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
