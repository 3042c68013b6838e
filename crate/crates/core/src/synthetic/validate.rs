//! Synthetic validation suites: does mutual compressibility respond to
//! irregularity and rule complexity, and does it vanish without shared
//! structure?
//!
//! Every cell (corpus kind, direction) is measured over the same seeds;
//! seed `s` generates the corpus and drives the run.

use serde::{Deserialize, Serialize};

use super::{generate, generate_independent, RuleSpec, SynthConfig, SynthError};
use crate::corpus::PairedCorpus;
use crate::prequential::{run_direction, Direction, ReplayConfig, RunError};
use crate::seqmodel::ModelConfig;
use crate::stats::{pooled_se, summarize, GroupSummary, StatsError};

#[derive(Debug, thiserror::Error)]
pub enum ValidateError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{cell} seed {seed}: {source}")]
    Run { cell: String, seed: u64, source: RunError },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Alphabet, length distribution and corpus size; `rules`, `epsilon`
    /// and `seed` are overridden per cell.
    pub corpus: SynthConfig,
    pub seeds: Vec<u64>,
    pub epsilons: Vec<f64>,
    pub simple_level: u8,
    pub complex_level: u8,
    /// Direction of the sweeps; the identity and independent suites run both.
    pub sweep_direction: Direction,
    pub identity_min_c: f64,
    pub independent_max_abs_c: f64,
    pub model: ModelConfig,
    pub replay: ReplayConfig,
    pub workers: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            corpus: SynthConfig::default(),
            seeds: (1..=5).collect(),
            epsilons: vec![0.0, 0.25, 0.5],
            simple_level: 1,
            complex_level: 4,
            sweep_direction: Direction::OrthToPhon,
            identity_min_c: 0.8,
            independent_max_abs_c: 0.05,
            model: ModelConfig::default(),
            replay: ReplayConfig::default(),
            workers: 1,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.corpus.validate()?;
        if self.seeds.len() < 2 {
            return Err(SynthError::Config("at least 2 seeds are needed for standard errors".into()));
        }
        if self.epsilons.len() < 2 || self.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(SynthError::Config("the exception sweep needs at least 2 rates in [0, 1]".into()));
        }
        for l in [self.simple_level, self.complex_level] {
            if !(1..=5).contains(&l) {
                return Err(SynthError::Config(format!("rule level {l} outside 1..=5")));
            }
        }
        self.replay.validate().map_err(SynthError::Config)
    }
}

/// Kinds of corpora the suites measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Identity,
    Independent,
    Exceptions(f64),
    Level(u8),
}

impl CellKind {
    pub fn label(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Independent => "independent".into(),
            Self::Exceptions(e) => format!("epsilon={e}"),
            Self::Level(l) => format!("level={l}"),
        }
    }

    pub fn corpus(&self, base: &SynthConfig, seed: u64) -> Result<PairedCorpus, SynthError> {
        let cfg = |rules, epsilon| SynthConfig { rules, epsilon, seed, ..base.clone() };
        Ok(match *self {
            Self::Identity => generate(&cfg(RuleSpec::Identity, 0.0))?.corpus,
            Self::Independent => generate_independent(&cfg(RuleSpec::Identity, 0.0))?,
            Self::Exceptions(e) => generate(&cfg(RuleSpec::Identity, e))?.corpus,
            Self::Level(l) => generate(&cfg(RuleSpec::Level(l), 0.0))?.corpus,
        })
    }
}

/// C over the seeds for one (corpus kind, direction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: CellKind,
    pub direction: Direction,
    pub seeds: Vec<u64>,
    pub summary: GroupSummary,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}/{}", self.kind.label(), self.direction)
    }
}

/// Measures one cell, one run per seed, on up to `workers` threads.
pub fn measure_cell(
    kind: CellKind,
    direction: Direction,
    config: &ValidationConfig,
) -> Result<Cell, ValidateError> {
    let run = |&seed: &u64| -> Result<f64, ValidateError> {
        let corpus = kind.corpus(&config.corpus, seed)?;
        run_direction(&corpus, direction, &config.model, &config.replay, seed)
            .map(|r| r.result.c)
            .map_err(|source| ValidateError::Run { cell: kind.label(), seed, source })
    };
    let cs: Vec<f64> = if config.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build();
        match pool {
            Ok(p) => p.install(|| config.seeds.par_iter().map(run).collect::<Result<_, _>>())?,
            Err(_) => config.seeds.iter().map(run).collect::<Result<_, _>>()?,
        }
    } else {
        config.seeds.iter().map(run).collect::<Result<_, _>>()?
    };
    let summary = summarize(&kind.label(), Some(direction), cs)?;
    Ok(Cell { kind, direction, seeds: config.seeds.clone(), summary })
}

/// Outcome of one property with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl PropertyCheck {
    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// `a.mean > b.mean` with the gap above the pooled standard error.
pub fn ordered_gap(name: &str, a: &Cell, b: &Cell) -> PropertyCheck {
    let gap = a.summary.mean - b.summary.mean;
    let se = pooled_se(&a.summary.values, &b.summary.values);
    PropertyCheck {
        name: name.into(),
        passed: gap > se,
        detail: format!(
            "C({}) = {:.4} > C({}) = {:.4}: gap {:.4}, pooled SE {:.4}",
            a.label(),
            a.summary.mean,
            b.label(),
            b.summary.mean,
            gap,
            se
        ),
    }
}

pub fn identity_check(cells: &[Cell], min_c: f64) -> PropertyCheck {
    let passed = cells.iter().all(|c| c.summary.mean >= min_c);
    let detail = cells.iter().map(|c| format!("C({}) = {:.4}", c.label(), c.summary.mean)).collect::<Vec<_>>();
    PropertyCheck { name: "identity".into(), passed, detail: format!("{} (need >= {min_c})", detail.join(", ")) }
}

pub fn independent_check(cells: &[Cell], max_abs_c: f64) -> PropertyCheck {
    let passed = cells.iter().all(|c| c.summary.mean.abs() <= max_abs_c);
    let detail = cells.iter().map(|c| format!("C({}) = {:.4}", c.label(), c.summary.mean)).collect::<Vec<_>>();
    PropertyCheck { name: "independent".into(), passed, detail: format!("{} (need |C| <= {max_abs_c})", detail.join(", ")) }
}

/// Bijective mappings should look the same from both sides.
pub fn symmetry_check(o2p: &Cell, p2o: &Cell) -> PropertyCheck {
    let delta = (o2p.summary.mean - p2o.summary.mean).abs();
    let se = pooled_se(&o2p.summary.values, &p2o.summary.values);
    PropertyCheck {
        name: "direction symmetry".into(),
        passed: delta <= 2.0 * se,
        detail: format!("|dC| = {delta:.4}, 2 x pooled SE = {:.4}", 2.0 * se),
    }
}

pub fn irregularity_check(sweep: &[Cell]) -> PropertyCheck {
    let pairs: Vec<PropertyCheck> = sweep.windows(2).map(|w| ordered_gap("", &w[0], &w[1])).collect();
    PropertyCheck {
        name: "irregularity monotonicity".into(),
        passed: pairs.iter().all(|p| p.passed),
        detail: pairs.iter().map(|p| p.detail.clone()).collect::<Vec<_>>().join("; "),
    }
}

pub fn complexity_check(simple: &Cell, complex: &Cell) -> PropertyCheck {
    PropertyCheck { name: "complexity monotonicity".into(), ..ordered_gap("", simple, complex) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub cells: Vec<Cell>,
    pub checks: Vec<PropertyCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.cells {
            let g = &c.summary;
            s.push_str(&format!(
                "{:<24} n={} mean C {:.4} sd {:.4} 95% CI [{:.4}, {:.4}]\n",
                c.label(),
                g.n,
                g.mean,
                g.sd,
                g.ci_low,
                g.ci_high
            ));
        }
        for c in &self.checks {
            s.push_str(&c.line());
            s.push('\n');
        }
        s
    }
}

/// Runs every suite. Cells shared between suites are measured once.
pub fn run_validation(config: &ValidationConfig) -> Result<ValidationReport, ValidateError> {
    config.validate()?;
    let mut cells: Vec<Cell> = Vec::new();
    let mut get = |kind: CellKind, dir: Direction| -> Result<Cell, ValidateError> {
        if let Some(c) = cells.iter().find(|c| c.kind == kind && c.direction == dir) {
            return Ok(c.clone());
        }
        let c = measure_cell(kind, dir, config)?;
        cells.push(c.clone());
        Ok(c)
    };
    let (o2p, p2o) = (Direction::OrthToPhon, Direction::PhonToOrth);
    let identity = [get(CellKind::Identity, o2p)?, get(CellKind::Identity, p2o)?];
    let independent = [get(CellKind::Independent, o2p)?, get(CellKind::Independent, p2o)?];
    let d = config.sweep_direction;
    let sweep = config
        .epsilons
        .iter()
        .map(|&e| get(if e == 0.0 { CellKind::Identity } else { CellKind::Exceptions(e) }, d))
        .collect::<Result<Vec<_>, _>>()?;
    let simple = get(CellKind::Level(config.simple_level), d)?;
    let complex = get(CellKind::Level(config.complex_level), d)?;
    let level_pair = [get(CellKind::Level(config.simple_level), o2p)?, get(CellKind::Level(config.simple_level), p2o)?];
    let checks = vec![
        identity_check(&identity, config.identity_min_c),
        independent_check(&independent, config.independent_max_abs_c),
        irregularity_check(&sweep),
        complexity_check(&simple, &complex),
        symmetry_check(&level_pair[0], &level_pair[1]),
    ];
    Ok(ValidationReport { config: config.clone(), cells, checks })
}
