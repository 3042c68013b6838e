use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mutcomp::corpus::PairedCorpus;
use mutcomp::prequential::{results_csv, run_suite, trace_csv, Direction, ReplayConfig, DEFAULT_SEEDS};
use mutcomp::seqmodel::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::manifest::{read_text, write_file, Outcome, RunManifest};
use crate::{CliError, CliResult, Defaults, InputContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    O2p,
    P2o,
    Both,
}

impl DirectionArg {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            Self::O2p => vec![Direction::OrthToPhon],
            Self::P2o => vec![Direction::PhonToOrth],
            Self::Both => Direction::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Corpus JSON written by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    direction: DirectionArg,
    /// Comma-separated run seeds; defaults to 1..=40.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Number of replay streams.
    #[arg(long)]
    streams: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Runs executed in parallel.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSettings {
    pub corpus: PathBuf,
    pub directions: Vec<Direction>,
    pub seeds: Vec<u64>,
    pub model: ModelConfig,
    pub replay: ReplayConfig,
    pub workers: usize,
    pub out: PathBuf,
}

impl MeasureArgs {
    pub fn resolve(&self, defaults: &Defaults) -> CliResult<MeasureSettings> {
        let seeds = if self.seeds.is_empty() { DEFAULT_SEEDS.to_vec() } else { self.seeds.clone() };
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(CliError::Input(anyhow::anyhow!("--seeds must be distinct")));
        }
        let mut replay = defaults.replay.clone();
        if let Some(b) = self.batch_size {
            replay.batch_size = b;
        }
        if let Some(k) = self.streams {
            replay.streams = k;
        }
        replay.validate().map_err(|e| CliError::Input(anyhow::anyhow!(e)))?;
        let mut model = defaults.model.clone();
        if let Some(lr) = self.learning_rate {
            model.optimizer.learning_rate = lr;
        }
        model.optimizer.validate().input(|| "optimizer settings".into())?;
        Ok(MeasureSettings {
            corpus: self.corpus.clone(),
            directions: self.direction.directions(),
            seeds,
            model,
            replay,
            workers: self.workers.max(1),
            out: self.out.clone(),
        })
    }
}

pub fn execute(s: &MeasureSettings) -> CliResult<()> {
    let mut manifest = RunManifest::new("measure", s);
    manifest.seeds = s.seeds.clone();
    let text = read_text(&s.corpus, &mut manifest.inputs)?;
    let corpus = PairedCorpus::from_json(&text).input(|| format!("{}", s.corpus.display()))?;
    eprintln!(
        "measuring {} entries ({}), {} direction(s) x {} seed(s)",
        corpus.len(),
        corpus.language(),
        s.directions.len(),
        s.seeds.len()
    );
    let suite = run_suite(&corpus, &s.directions, &s.seeds, &s.model, &s.replay, s.workers);
    let mut rows = Vec::new();
    let mut failures = 0;
    for entry in &suite {
        let label = format!("{}/seed{}", entry.direction, entry.seed);
        match &entry.outcome {
            Ok(run) => {
                rows.push(run.result.row());
                for (kind, trace) in [("cond", &run.conditional), ("uncond", &run.unconditional)] {
                    let name = format!("{}_seed{}_{kind}.csv", entry.direction, entry.seed);
                    write_file(&s.out.join("traces").join(name), &trace_csv(trace))?;
                }
                manifest.outcomes.push(Outcome {
                    label,
                    ok: true,
                    message: Some(format!(
                        "C = {}; corpus {}; config {}",
                        run.result.c, run.result.corpus_digest, run.result.config_digest
                    )),
                });
            }
            Err(e) => {
                failures += 1;
                eprintln!("run {label} failed: {e}");
                manifest.outcomes.push(Outcome { label, ok: false, message: Some(e.to_string()) });
            }
        }
    }
    write_file(&s.out.join("results.csv"), &results_csv(&rows))?;
    manifest.write(&s.out.join("manifest.json"))?;
    eprintln!("{} result row(s) written to {}", rows.len(), s.out.join("results.csv").display());
    if failures > 0 {
        return Err(CliError::Failure(anyhow::anyhow!("{failures} of {} runs failed", suite.len())));
    }
    Ok(())
}
