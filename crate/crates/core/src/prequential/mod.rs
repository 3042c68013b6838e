//! Prequential (encode-then-train) code lengths with replay streams, and
//! their combination into mutual compressibility.
//!
//! A conditional run codes each target given its input; the unconditional
//! run codes the same targets with every input replaced by `[MASK]`. Both
//! runs of a pair share the seed, hence the initialization, presentation
//! order and replay schedule.

mod io;
mod replay;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PairedCorpus;
use crate::digest::sha256_hex;
use crate::seeding::{self, Purpose};
use crate::seqmodel::{Batch, ConvSeq2Seq, ModelConfig, ModelError, SequenceModel};

pub use io::{parse_results_csv, results_csv, trace_csv, ResultRow};
pub use replay::{ReplayConfig, ReplayStreams, ResetLaw};

/// The forty default run seeds.
pub const DEFAULT_SEEDS: [u64; 40] = {
    let mut s = [0u64; 40];
    let mut i = 0;
    while i < 40 {
        s[i] = i as u64 + 1;
        i += 1;
    }
    s
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("nothing to code: the corpus is empty")]
    EmptyCorpus,
    #[error("invalid replay config: {0}")]
    Replay(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("run diverged after {} batches: {source}", trace.per_batch_bits.len())]
    Diverged { trace: Box<CodelengthTrace>, source: ModelError },
}

#[derive(Debug, Error, PartialEq)]
#[error("unconditional code length must be positive and finite, got {0}")]
pub struct DomainError(pub f64);

/// Which side is coded given which.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Pronunciation coded given spelling (reading).
    #[serde(rename = "o2p")]
    OrthToPhon,
    /// Spelling coded given pronunciation (spelling).
    #[serde(rename = "p2o")]
    PhonToOrth,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::OrthToPhon, Direction::PhonToOrth];

    /// (input, target) index pairs for this direction.
    pub fn pairs(self, corpus: &PairedCorpus) -> Vec<(Vec<u32>, Vec<u32>)> {
        corpus
            .entries()
            .iter()
            .map(|e| {
                let (o, p) = (e.orth.symbols().to_vec(), e.phon.symbols().to_vec());
                match self {
                    Self::OrthToPhon => (o, p),
                    Self::PhonToOrth => (p, o),
                }
            })
            .collect()
    }

    /// (input vocabulary size, output vocabulary size).
    pub fn vocab_sizes(self, corpus: &PairedCorpus) -> (usize, usize) {
        let (o, p) = (corpus.vocab_orth().len(), corpus.vocab_phon().len());
        match self {
            Self::OrthToPhon => (o, p),
            Self::PhonToOrth => (p, o),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OrthToPhon => "o2p",
            Self::PhonToOrth => "p2o",
        })
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "o2p" => Ok(Self::OrthToPhon),
            "p2o" => Ok(Self::PhonToOrth),
            _ => Err(format!("unknown direction {s:?} (expected o2p|p2o)")),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Per-batch code lengths of one coding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodelengthTrace {
    pub per_batch_bits: Vec<f64>,
    /// Compensated sum of `per_batch_bits`.
    pub total_bits: f64,
    /// Scored symbols (targets plus their `EOS`).
    pub symbol_count: usize,
    pub direction: Option<Direction>,
    pub masked: bool,
    pub seed: u64,
    pub config_digest: String,
}

impl CodelengthTrace {
    fn new(masked: bool, seed: u64) -> Self {
        Self {
            per_batch_bits: Vec::new(),
            total_bits: 0.0,
            symbol_count: 0,
            direction: None,
            masked,
            seed,
            config_digest: String::new(),
        }
    }

    /// Running totals after each batch.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::default();
        self.per_batch_bits
            .iter()
            .map(|&b| {
                acc.add(b);
                acc.value()
            })
            .collect()
    }
}

/// Order in which entries are presented: a seeded shuffle.
pub fn presentation_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeding::rng(seed, Purpose::Presentation));
    order
}

/// Codes `pairs` (input, target) prequentially with replay streams.
///
/// The entries are shuffled by the presentation seed and cut into batches.
/// For each batch in turn the current model codes it, then trains on it and
/// on the batch under each replay stream. `factory` builds the initial model
/// from `seed`.
pub fn mirs_codelength<M, F>(
    pairs: &[(Vec<u32>, Vec<u32>)],
    factory: F,
    replay: &ReplayConfig,
    masked: bool,
    seed: u64,
) -> Result<CodelengthTrace, RunError>
where
    M: SequenceModel,
    F: FnOnce(u64) -> Result<M, ModelError>,
{
    replay.validate().map_err(RunError::Replay)?;
    if pairs.is_empty() {
        return Err(RunError::EmptyCorpus);
    }
    let order = presentation_order(pairs.len(), replay.order_seed.unwrap_or(seed));
    let batches = order
        .chunks(replay.batch_size)
        .map(|idx| Batch::new(idx.iter().map(|&i| pairs[i].clone()).collect(), masked))
        .collect::<Result<Vec<_>, _>>()?;
    let mut model = factory(seed)?;
    let mut streams =
        ReplayStreams::new(replay.streams, replay.reset, seeding::rng(seed, Purpose::ReplayReset));
    let mut trace = CodelengthTrace::new(masked, seed);
    let mut total = CompensatedSum::default();

    for (n, batch) in batches.iter().enumerate() {
        let bits = match model.batch_codelength(batch) {
            Ok(b) if b.is_finite() && b >= 0.0 => b,
            Ok(_) => {
                let source = ModelError::NonFinite { what: "code length", step: n as u64 };
                return Err(RunError::Diverged { trace: Box::new(trace), source });
            }
            Err(source) => return Err(RunError::Diverged { trace: Box::new(trace), source }),
        };
        trace.per_batch_bits.push(bits);
        trace.symbol_count += batch.scored_positions();
        total.add(bits);
        trace.total_bits = total.value();
        for b in streams.iteration(n + 1) {
            if let Err(source) = model.train_step(&batches[b]) {
                return Err(RunError::Diverged { trace: Box::new(trace), source });
            }
        }
    }
    Ok(trace)
}

/// `1 - L_cond / L_uncond`: the share of the unconditional code length
/// saved by the side information. Negative when the side information hurts.
/// Computed as `I / L_uncond` so the two agree bit for bit.
pub fn mutual_compressibility(l_cond: f64, l_uncond: f64) -> Result<f64, DomainError> {
    if !(l_uncond > 0.0 && l_uncond.is_finite()) {
        return Err(DomainError(l_uncond));
    }
    Ok(mutual_information_bits(l_cond, l_uncond) / l_uncond)
}

/// `L_uncond - L_cond` in bits.
pub fn mutual_information_bits(l_cond: f64, l_uncond: f64) -> f64 {
    l_uncond - l_cond
}

/// Paired conditional/unconditional code lengths for one direction and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibilityResult {
    pub language: String,
    pub direction: Direction,
    pub seed: u64,
    pub l_cond: f64,
    pub l_uncond: f64,
    pub c: f64,
    pub i_bits: f64,
    pub corpus_digest: String,
    pub config_digest: String,
}

impl CompressibilityResult {
    pub fn from_lengths(
        language: &str,
        direction: Direction,
        seed: u64,
        l_cond: f64,
        l_uncond: f64,
    ) -> Result<Self, DomainError> {
        Ok(Self {
            language: language.to_string(),
            direction,
            seed,
            l_cond,
            l_uncond,
            c: mutual_compressibility(l_cond, l_uncond)?,
            i_bits: mutual_information_bits(l_cond, l_uncond),
            corpus_digest: String::new(),
            config_digest: String::new(),
        })
    }

    pub fn row(&self) -> ResultRow {
        ResultRow {
            language: self.language.clone(),
            direction: self.direction,
            seed: self.seed,
            l_cond: self.l_cond,
            l_uncond: self.l_uncond,
            c: self.c,
            i_bits: self.i_bits,
        }
    }
}

/// A result together with both traces it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRun {
    pub result: CompressibilityResult,
    pub conditional: CodelengthTrace,
    pub unconditional: CodelengthTrace,
}

/// Runs the masked and unmasked codings of `pairs` with the same seed and
/// combines them.
pub fn run_pairs<M, F>(
    pairs: &[(Vec<u32>, Vec<u32>)],
    language: &str,
    direction: Direction,
    factory: F,
    replay: &ReplayConfig,
    seed: u64,
) -> Result<DirectionRun, RunError>
where
    M: SequenceModel,
    F: Fn(u64) -> Result<M, ModelError>,
{
    let mut conditional = mirs_codelength(pairs, &factory, replay, false, seed)?;
    let mut unconditional = mirs_codelength(pairs, &factory, replay, true, seed)?;
    conditional.direction = Some(direction);
    unconditional.direction = Some(direction);
    let result = CompressibilityResult::from_lengths(
        language,
        direction,
        seed,
        conditional.total_bits,
        unconditional.total_bits,
    )
    .map_err(|e| RunError::Model(ModelError::Config(e.to_string())))?;
    Ok(DirectionRun { result, conditional, unconditional })
}

/// Model configuration actually used for `corpus` in `direction`: vocabulary
/// sizes from the corpus, `max_len` raised to the longest sequence, and the
/// run seed.
pub fn bind_config(corpus: &PairedCorpus, direction: Direction, config: &ModelConfig, seed: u64) -> ModelConfig {
    let (vi, vo) = direction.vocab_sizes(corpus);
    let longest = corpus.entries().iter().map(|e| e.orth.len().max(e.phon.len())).max().unwrap_or(1);
    let mut cfg = config.clone().with_vocab(vi, vo).with_seed(seed);
    cfg.max_len = cfg.max_len.max(longest);
    cfg
}

pub fn corpus_digest(corpus: &PairedCorpus) -> String {
    sha256_hex(corpus.to_json().expect("corpus serializes").as_bytes())
}

/// Measures one direction of `corpus` with the convolutional model.
pub fn run_direction(
    corpus: &PairedCorpus,
    direction: Direction,
    config: &ModelConfig,
    replay: &ReplayConfig,
    seed: u64,
) -> Result<DirectionRun, RunError> {
    run_direction_digested(corpus, &corpus_digest(corpus), direction, config, replay, seed)
}

fn run_direction_digested(
    corpus: &PairedCorpus,
    digest: &str,
    direction: Direction,
    config: &ModelConfig,
    replay: &ReplayConfig,
    seed: u64,
) -> Result<DirectionRun, RunError> {
    if corpus.is_empty() {
        return Err(RunError::EmptyCorpus);
    }
    let cfg = bind_config(corpus, direction, config, seed);
    let config_digest = cfg.digest();
    let pairs = direction.pairs(corpus);
    let factory = |s: u64| ConvSeq2Seq::<f32>::new(cfg.clone().with_seed(s));
    let mut run = run_pairs(&pairs, corpus.language(), direction, factory, replay, seed)?;
    run.result.corpus_digest = digest.to_string();
    run.result.config_digest = config_digest.clone();
    run.conditional.config_digest = config_digest.clone();
    run.unconditional.config_digest = config_digest;
    Ok(run)
}

/// Outcome of one (direction, seed) job of a suite.
#[derive(Debug)]
pub struct SuiteEntry {
    pub direction: Direction,
    pub seed: u64,
    pub outcome: Result<DirectionRun, RunError>,
}

/// Runs every (direction, seed) combination, direction-major, on up to
/// `workers` threads. Failed runs are reported in place; the others are
/// unaffected.
pub fn run_suite(
    corpus: &PairedCorpus,
    directions: &[Direction],
    seeds: &[u64],
    config: &ModelConfig,
    replay: &ReplayConfig,
    workers: usize,
) -> Vec<SuiteEntry> {
    let digest = corpus_digest(corpus);
    let jobs: Vec<(Direction, u64)> =
        directions.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    let run = |&(direction, seed): &(Direction, u64)| SuiteEntry {
        direction,
        seed,
        outcome: run_direction_digested(corpus, &digest, direction, config, replay, seed),
    };
    if workers <= 1 {
        return jobs.iter().map(run).collect();
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| jobs.par_iter().map(run).collect()),
        Err(_) => jobs.iter().map(run).collect(),
    }
}
