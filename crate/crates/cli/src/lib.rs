//! Command-line front end: corpus analysis, two-corpus comparison, fixture
//! synthesis and plot re-rendering.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input or configuration.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod svg;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use synthprint::synth::{write_fixture, FixtureSpec};

pub use config::{RunArgs, RunConfig};
pub use report::Report;

#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "synthprint", version, about = "Second-order fingerprints of image corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average spectra and autocorrelation of one corpus and run the detectors.
    Analyze(RunArgs),
    /// Analyze a subject corpus and compare its angular spectrum with a reference.
    Compare(RunArgs),
    /// Generate a fixture corpus from a JSON spec.
    Synth(SynthArgs),
    /// Re-render the plots of an existing report.json.
    Report(ReportArgs),
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// Fixture spec (JSON).
    #[arg(long, alias = "config")]
    pub spec: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Maximum sample value of the written PGM files.
    #[arg(long, default_value_t = 65535)]
    pub maxval: u32,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Path of report.json.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the plots; defaults to the report's directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Loads and validates a fixture spec; errors name the offending field.
pub fn load_fixture_spec(path: &std::path::Path) -> Result<FixtureSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read spec {}: {e}", path.display())))?;
    let spec: FixtureSpec = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("spec: {e}")))?;
    spec.validate().map_err(|e| CliError::Input(format!("spec: {e}")))?;
    Ok(spec)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let report = report::run_analysis(&RunConfig::resolve(&args)?, false)?;
            print_summary(&report);
        }
        Command::Compare(args) => {
            let report = report::run_analysis(&RunConfig::resolve(&args)?, true)?;
            print_summary(&report);
        }
        Command::Synth(args) => {
            let spec = load_fixture_spec(&args.spec)?;
            if !(1..=65535).contains(&args.maxval) {
                return Err(CliError::Input(format!("maxval must be in [1, 65535], got {}", args.maxval)));
            }
            let paths = write_fixture(&spec, &args.output, args.maxval, args.threads)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            println!("wrote {} images to {}", paths.len(), args.output.display());
        }
        Command::Report(args) => {
            let paths = report::rerender(&args.input, args.output.as_deref())?;
            for p in paths {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn print_summary(r: &Report) {
    println!(
        "{} images ({} failed), {}x{}",
        r.corpus.usable,
        r.errors.len(),
        r.corpus.width,
        r.corpus.height
    );
    match r.peaks.inferred_factor {
        Some(n) => println!("upsampling factor: {n} ({} peaks)", r.peaks.peaks.len()),
        None => println!("upsampling factor: none ({} peaks)", r.peaks.peaks.len()),
    }
    if let Some(g) = &r.grid {
        println!("grid score: {:.3}", g.score);
    }
    if let Some(f) = &r.power_law {
        println!("power-law alpha: {:.3}", f.alpha);
    }
}
