//! `gazegrid` — batch pipeline for scanpath expertise analysis.
//!
//! Subcommands: `synth` (generate a seeded synthetic dataset), `encode`
//! (spatiotemporal count matrices), `features` (the five traditional
//! features), `sweep` (the full cross-validated factorial study), and
//! `report` (re-aggregate an existing raw-record CSV).
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gazegrid::data::DataError;
use gazegrid::evaluation::EvalError;
use gazegrid::features::FeatureError;
use gazegrid::synth::SynthError;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "gazegrid",
    version,
    about = "Gaze-scanpath encoding and expertise classification"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the sweep (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override every seed in the config with this one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the planned work and exit without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic fixation CSV and salient-mask PGM.
    Synth,
    /// Write one encoded-matrix CSV per configured (grid, t) pair.
    Encode,
    /// Write the traditional-features CSV.
    Features,
    /// Run the factorial cross-validation sweep and write all reports.
    Sweep,
    /// Re-aggregate reports from an existing raw-record CSV.
    Report {
        /// Raw-record CSV (default: <output_dir>/raw_records.csv).
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

/// Error taxonomy mapped onto the documented exit codes.
#[derive(Debug)]
pub enum AppError {
    /// Exit 2: configuration problems.
    Config(String),
    /// Exit 3: data problems (unreadable/invalid inputs, empty masks).
    Data(String),
    /// Exit 4: numerical failures inside the pipeline.
    Numeric(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
            AppError::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m) | AppError::Data(m) | AppError::Numeric(m) => m,
        }
    }
}

impl From<DataError> for AppError {
    fn from(e: DataError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<FeatureError> for AppError {
    fn from(e: FeatureError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<SynthError> for AppError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => AppError::Config(e.to_string()),
            SynthError::RejectionOverflow(_) => AppError::Numeric(e.to_string()),
        }
    }
}

impl From<EvalError> for AppError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidSettings(_) => AppError::Config(e.to_string()),
            EvalError::TooFewPerClass { .. } | EvalError::Feature(_) => {
                AppError::Data(e.to_string())
            }
            EvalError::SingleClassTruth
            | EvalError::EmptyGroup
            | EvalError::Model(_)
            | EvalError::DimRed(_) => AppError::Numeric(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| AppError::Config("--config <path> is required".into()))?;
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }

    match &cli.command {
        Command::Synth => commands::synth(&config, cli.dry_run),
        Command::Encode => commands::encode(&config, cli.dry_run),
        Command::Features => commands::features(&config, cli.dry_run),
        Command::Sweep => commands::sweep(&config, cli.jobs, cli.dry_run),
        Command::Report { records } => commands::report(&config, records.as_deref()),
    }
}
