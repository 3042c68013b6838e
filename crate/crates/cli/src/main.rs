//! `mutcomp`: ingest lexicons, measure mutual compressibility, validate on
//! synthetic corpora and report aggregated results.

mod config;
mod ingest;
mod manifest;
mod measure;
mod report;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::Defaults;

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable/malformed input: exit 2.
    Input(anyhow::Error),
    /// A measurement or property check failed: exit 1.
    Failure(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Input(_) => 2,
            Self::Failure(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait InputContext<T> {
    fn input(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> InputContext<T> for Result<T, E> {
    fn input(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::Input(e.into().context(what())))
    }
}

#[derive(Parser)]
#[command(name = "mutcomp", version, about = "Mutual compressibility of orthography and phonology")]
struct Cli {
    /// JSON file with default model and replay settings.
    #[arg(long, global = true, env = "MUTCOMP_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a corpus from a pronunciation lexicon and a frequency list.
    Ingest(ingest::IngestArgs),
    /// Measure mutual compressibility of a corpus over seeds and directions.
    Measure(measure::MeasureArgs),
    /// Run the synthetic validation suites.
    Validate(validate::ValidateArgs),
    /// Aggregate results files into summaries, pairwise tests and a plot spec.
    Report(report::ReportArgs),
    /// Repeat a command from its manifest.
    Rerun(manifest::RerunArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let defaults = Defaults::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => ingest::execute(&a.resolve()?),
        Command::Measure(a) => measure::execute(&a.resolve(&defaults)?),
        Command::Validate(a) => validate::execute(&a.resolve(&defaults)?),
        Command::Report(a) => report::execute(&a.resolve()),
        Command::Rerun(a) => manifest::rerun(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Input(err) | CliError::Failure(err)) = &e;
            eprintln!("error: {err:#}");
            ExitCode::from(e.code())
        }
    }
}
