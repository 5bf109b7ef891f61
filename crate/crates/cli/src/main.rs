//! `qcwork` command-line front end.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use qcwork::workstats::WorkDefinition;

use config::{CommonArgs, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Lib(#[from] qcwork::Error),
    #[error("check failed: {0}")]
    Check(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use qcwork::Error as E;
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Lib(e) if e.is_accuracy() => 4,
            CliError::Lib(E::InvalidProtocol(_) | E::InvalidArgument(_) | E::InvalidDimension { .. }) => 2,
            CliError::Lib(_) | CliError::Check(_) => 3,
            CliError::Accuracy(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "qcwork", version, about = "Work statistics of a dragged quantum oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// TPM, FCS, MH and classical characteristic functions on the eta grid.
    Cf(CommonArgs),
    /// Work quasi-distributions with a summary block.
    Dist {
        #[command(flatten)]
        common: CommonArgs,
        /// tpm, fcs or mh; all three when omitted.
        #[arg(long)]
        definition: Option<WorkDefinition>,
    },
    /// Classical, zeroth-order and second-order series, real and imaginary panels.
    Fig1(CommonArgs),
    /// Raw hbar-scan samples and polynomial fits for FCS and MH.
    ScanHbar(CommonArgs),
    /// Generalized Jarzynski checks for every definition.
    Jarzynski(CommonArgs),
    /// Classical closed form and Monte Carlo characteristic function.
    Classical(CommonArgs),
    /// Wigner fields before and after an energy measurement.
    Measure(CommonArgs),
}

fn run(cli: Cli) -> Result<Vec<std::path::PathBuf>, CliError> {
    match cli.command {
        Command::Cf(a) => commands::cf(&RunConfig::resolve(&a)?),
        Command::Dist { common, definition } => commands::dist(&RunConfig::resolve(&common)?, definition),
        Command::Fig1(a) => commands::fig1(&RunConfig::resolve(&a)?),
        Command::ScanHbar(a) => commands::scan_hbar(&RunConfig::resolve(&a)?),
        Command::Jarzynski(a) => commands::jarzynski(&RunConfig::resolve(&a)?),
        Command::Classical(a) => commands::classical(&RunConfig::resolve(&a)?),
        Command::Measure(a) => commands::measure(&RunConfig::resolve(&a)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qcwork: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
