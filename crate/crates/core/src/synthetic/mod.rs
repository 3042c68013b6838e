//! Artificial phonology/orthography pairs with separately controlled rule
//! complexity and irregularity.
//!
//! Words are sequences of phoneme ids `0..alphabet_size`. A [`RuleTable`]
//! spells them longest-match-first, and a fraction `epsilon` of words get a
//! persistent random spelling (an exception) instead.

pub mod validate;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, CorpusMeta, PairedCorpus};
use crate::seeding::{self, Purpose, SeededRng};

/// Printable names of symbol ids; phoneme `i` and grapheme `i` share a name.
const SYMBOL_NAMES: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

pub const MAX_ALPHABET: usize = 62;

pub type Word = Vec<u32>;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error("only {possible} distinct words exist under the length limits, {requested} requested")]
    TooFewWords { possible: u128, requested: usize },
    #[error("rule table does not cover phoneme {0}")]
    NotTotal(u32),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Truncated geometric word length: `min + G` where `G` counts failures
/// before a success of probability `stop`, redrawn while above `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthDist {
    pub min: usize,
    pub stop: f64,
    pub max: usize,
}

impl Default for LengthDist {
    fn default() -> Self {
        Self { min: 2, stop: 0.35, max: 10 }
    }
}

impl LengthDist {
    fn validate(&self) -> Result<(), SynthError> {
        if self.min == 0 || self.max < self.min {
            return Err(SynthError::Config(format!("length range {}..={} is empty or starts at 0", self.min, self.max)));
        }
        if !(self.stop > 0.0 && self.stop <= 1.0) {
            return Err(SynthError::Config(format!("stop probability {} outside (0, 1]", self.stop)));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        loop {
            let mut len = self.min;
            while len <= self.max && rng.random::<f64>() >= self.stop {
                len += 1;
            }
            if len <= self.max {
                return len;
            }
        }
    }

    /// Exact mean of the truncated distribution.
    pub fn mean(&self) -> f64 {
        let q = 1.0 - self.stop;
        let (mut mass, mut first) = (0.0, 0.0);
        for (g, len) in (self.min..=self.max).enumerate() {
            let p = q.powi(g as i32) * self.stop;
            mass += p;
            first += p * len as f64;
        }
        first / mass
    }
}

/// Which rule table spells the phonology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RuleSpec {
    /// Every phoneme is spelled by the grapheme of the same name.
    #[default]
    Identity,
    /// [`gen_rule_table`] at this level.
    Level(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub alphabet_size: usize,
    pub length: LengthDist,
    pub n: usize,
    pub rules: RuleSpec,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 20,
            length: LengthDist::default(),
            n: 2000,
            rules: RuleSpec::Identity,
            epsilon: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.alphabet_size < 2 || self.alphabet_size > MAX_ALPHABET {
            return Err(SynthError::Config(format!("alphabet size must be in 2..={MAX_ALPHABET}")));
        }
        if self.n == 0 {
            return Err(SynthError::Config("corpus size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(SynthError::Config(format!("exception rate {} outside [0, 1]", self.epsilon)));
        }
        if let RuleSpec::Level(l) = self.rules {
            if !(1..=5).contains(&l) {
                return Err(SynthError::Config(format!("rule level {l} outside 1..=5")));
            }
        }
        self.length.validate()
    }
}

pub fn symbol_name(id: u32) -> String {
    SYMBOL_NAMES.chars().nth(id as usize).expect("symbol id within the name table").to_string()
}

/// `n` distinct words with lengths from `config.length` and uniform phonemes.
pub fn gen_phonology(config: &SynthConfig) -> Result<Vec<Word>, SynthError> {
    config.validate()?;
    gen_words(config, &mut seeding::rng(config.seed, Purpose::Phonology))
}

fn gen_words(config: &SynthConfig, rng: &mut SeededRng) -> Result<Vec<Word>, SynthError> {
    let a = config.alphabet_size as u128;
    let possible = (config.length.min..=config.length.max)
        .map(|l| a.checked_pow(l as u32).unwrap_or(u128::MAX))
        .fold(0u128, |acc, x| acc.saturating_add(x));
    if possible < config.n as u128 {
        return Err(SynthError::TooFewWords { possible, requested: config.n });
    }
    let mut seen = HashSet::with_capacity(config.n);
    let mut words = Vec::with_capacity(config.n);
    while words.len() < config.n {
        let len = config.length.sample(rng);
        let w: Word = (0..len).map(|_| rng.random_range(0..config.alphabet_size as u32)).collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    Ok(words)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub phonemes: Vec<u32>,
    pub graphemes: Vec<u32>,
}

/// Grapheme-phoneme correspondence rules applied longest match first, ties
/// going to the earlier rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTable {
    pub alphabet_size: usize,
    pub level: u8,
    pub rules: Vec<Rule>,
}

impl RuleTable {
    /// Level-0 table: each phoneme spelled by itself.
    pub fn identity(alphabet_size: usize) -> Self {
        let rules = (0..alphabet_size as u32).map(|p| Rule { phonemes: vec![p], graphemes: vec![p] }).collect();
        Self { alphabet_size, level: 0, rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn max_n(&self) -> usize {
        self.rules.iter().map(|r| r.phonemes.len()).max().unwrap_or(0)
    }

    /// Every phoneme has a single-phoneme rule.
    pub fn check_total(&self) -> Result<(), SynthError> {
        let covered: HashSet<u32> =
            self.rules.iter().filter(|r| r.phonemes.len() == 1).map(|r| r.phonemes[0]).collect();
        match (0..self.alphabet_size as u32).find(|p| !covered.contains(p)) {
            Some(p) => Err(SynthError::NotTotal(p)),
            None => Ok(()),
        }
    }

    pub fn spell(&self, word: &[u32]) -> Result<Word, SynthError> {
        let mut by_len: BTreeMap<usize, Vec<&Rule>> = BTreeMap::new();
        for r in &self.rules {
            by_len.entry(r.phonemes.len()).or_default().push(r);
        }
        let mut out = Vec::new();
        let mut i = 0;
        'outer: while i < word.len() {
            for (n, rules) in by_len.iter().rev() {
                if i + n > word.len() {
                    continue;
                }
                if let Some(r) = rules.iter().find(|r| r.phonemes[..] == word[i..i + n]) {
                    out.extend_from_slice(&r.graphemes);
                    i += n;
                    continue 'outer;
                }
            }
            return Err(SynthError::NotTotal(word[i]));
        }
        Ok(out)
    }
}

/// Multi-phoneme rules added per level above 1.
pub fn rules_per_level(alphabet_size: usize) -> usize {
    alphabet_size.div_ceil(2)
}

/// Rule table of complexity `level` (1..=5).
///
/// Level 1 is a random bijection between phonemes and graphemes. Each
/// further level adds `ceil(|A| / 2)` rules mapping a phoneme n-gram to a
/// grapheme string of length 1 or 2: bigrams at levels 2 and 3, trigrams at
/// levels 4 and 5. N-grams are distinct, so the table stays deterministic.
pub fn gen_rule_table(level: u8, alphabet_size: usize, seed: u64) -> Result<RuleTable, SynthError> {
    if !(1..=5).contains(&level) {
        return Err(SynthError::Config(format!("rule level {level} outside 1..=5")));
    }
    if !(2..=MAX_ALPHABET).contains(&alphabet_size) {
        return Err(SynthError::Config(format!("alphabet size must be in 2..={MAX_ALPHABET}")));
    }
    let mut rng = seeding::rng(seed, Purpose::RuleTable);
    let a = alphabet_size as u32;
    let mut perm: Vec<u32> = (0..a).collect();
    perm.shuffle(&mut rng);
    let mut rules: Vec<Rule> =
        (0..a).map(|p| Rule { phonemes: vec![p], graphemes: vec![perm[p as usize]] }).collect();
    let mut used: HashSet<Vec<u32>> = HashSet::new();
    for l in 2..=level {
        let n = if l >= 4 { 3 } else { 2 };
        let available = (alphabet_size as u128).pow(n as u32) - used.iter().filter(|u| u.len() == n).count() as u128;
        let take = (rules_per_level(alphabet_size) as u128).min(available) as usize;
        let mut added = 0;
        while added < take {
            let phonemes: Vec<u32> = (0..n).map(|_| rng.random_range(0..a)).collect();
            if !used.insert(phonemes.clone()) {
                continue;
            }
            let glen = rng.random_range(1..=2);
            let graphemes = (0..glen).map(|_| rng.random_range(0..a)).collect();
            rules.push(Rule { phonemes, graphemes });
            added += 1;
        }
    }
    Ok(RuleTable { alphabet_size, level, rules })
}

pub fn rule_table_for(config: &SynthConfig) -> Result<RuleTable, SynthError> {
    match config.rules {
        RuleSpec::Identity => Ok(RuleTable::identity(config.alphabet_size)),
        RuleSpec::Level(l) => gen_rule_table(l, config.alphabet_size, config.seed),
    }
}

/// A word whose spelling does not follow the rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exception {
    pub entry: usize,
    pub regular: String,
    pub exceptional: String,
}

/// Config echo plus everything random that went into a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub config: Option<SynthConfig>,
    pub rule_table: RuleTable,
    pub exceptions: Vec<Exception>,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: PairedCorpus,
    pub manifest: GenerationManifest,
}

fn render(ids: &[u32]) -> Vec<String> {
    ids.iter().map(|&i| symbol_name(i)).collect()
}

/// Spells every word with `rules`; with probability `epsilon` a word's
/// spelling is replaced by uniform random graphemes of the same length.
pub fn gen_orthography(
    phon_words: &[Word],
    rules: &RuleTable,
    epsilon: f64,
    seed: u64,
) -> Result<SynthCorpus, SynthError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(SynthError::Config(format!("exception rate {epsilon} outside [0, 1]")));
    }
    rules.check_total()?;
    let mut rng = seeding::rng(seed, Purpose::Exceptions);
    let a = rules.alphabet_size as u32;
    let mut exceptions = Vec::new();
    let mut pairs = Vec::with_capacity(phon_words.len());
    for (entry, w) in phon_words.iter().enumerate() {
        let regular = rules.spell(w)?;
        // both draws happen for every word so the exception set at one rate
        // does not shift the spellings drawn at another
        let draw: f64 = rng.random();
        let random: Word = (0..regular.len()).map(|_| rng.random_range(0..a)).collect();
        let spelling = if draw < epsilon {
            exceptions.push(Exception {
                entry,
                regular: render(&regular).concat(),
                exceptional: render(&random).concat(),
            });
            random
        } else {
            regular
        };
        pairs.push((render(&spelling), render(w)));
    }
    let corpus = PairedCorpus::from_pairs(CorpusMeta::new("synthetic", Default::default()), &pairs)?;
    Ok(SynthCorpus { corpus, manifest: GenerationManifest { config: None, rule_table: rules.clone(), exceptions } })
}

/// Phonology, rule table and orthography from one config.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    let words = gen_phonology(config)?;
    let rules = rule_table_for(config)?;
    let mut out = gen_orthography(&words, &rules, config.epsilon, config.seed)?;
    out.manifest.config = Some(config.clone());
    Ok(out)
}

/// Pairs drawn independently: the spelling side is a second phonology
/// sample with the same distribution, so no structure is shared.
pub fn generate_independent(config: &SynthConfig) -> Result<PairedCorpus, SynthError> {
    config.validate()?;
    let words = gen_phonology(config)?;
    let others = gen_words(config, &mut seeding::rng(config.seed, Purpose::Orthography))?;
    let pairs: Vec<_> = others.iter().zip(&words).map(|(o, p)| (render(o), render(p))).collect();
    Ok(PairedCorpus::from_pairs(CorpusMeta::new("synthetic-independent", Default::default()), &pairs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, alphabet_size: usize) -> SynthConfig {
        SynthConfig { n, alphabet_size, seed: 3, ..Default::default() }
    }

    #[test]
    fn phonology_is_deterministic_and_unique() {
        let cfg = SynthConfig { length: LengthDist { min: 1, stop: 0.5, max: 3 }, ..small(3, 2) };
        let a = gen_phonology(&cfg).unwrap();
        assert_eq!(a, gen_phonology(&cfg).unwrap());
        assert_eq!(a.len(), 3);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 3);
    }

    #[test]
    fn pigeonhole() {
        // 2 + 4 = 6 words of length 1 or 2 over two phonemes
        let len = LengthDist { min: 1, stop: 0.5, max: 2 };
        assert!(gen_phonology(&SynthConfig { length: len, ..small(6, 2) }).is_ok());
        assert!(matches!(
            gen_phonology(&SynthConfig { length: len, ..small(7, 2) }),
            Err(SynthError::TooFewWords { possible: 6, requested: 7 })
        ));
    }

    #[test]
    fn mean_length_matches_distribution() {
        // short words must be plentiful or deduplication skews the lengths
        let cfg = SynthConfig { length: LengthDist { min: 3, stop: 0.3, max: 12 }, ..small(5000, 40) };
        let words = gen_phonology(&cfg).unwrap();
        let mean = words.iter().map(|w| w.len() as f64).sum::<f64>() / words.len() as f64;
        let expected = cfg.length.mean();
        assert!((mean - expected).abs() < 0.1 * expected, "{mean} vs {expected}");
    }

    #[test]
    fn truncated_mean_by_hand() {
        // min 1, max 2, stop 1/2: P(1) = 1/2, P(2) = 1/4, renormalized 2/3, 1/3
        let d = LengthDist { min: 1, stop: 0.5, max: 2 };
        assert!((d.mean() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_rules_copy() {
        let words = gen_phonology(&small(50, 5)).unwrap();
        let sc = gen_orthography(&words, &RuleTable::identity(5), 0.0, 1).unwrap();
        for (o, p) in sc.corpus.symbol_pairs() {
            assert_eq!(o, p);
        }
        assert!(sc.manifest.exceptions.is_empty());
    }

    #[test]
    fn every_word_is_an_exception_at_rate_one() {
        let words = gen_phonology(&small(40, 6)).unwrap();
        let sc = gen_orthography(&words, &RuleTable::identity(6), 1.0, 1).unwrap();
        assert_eq!(sc.manifest.exceptions.len(), 40);
        for (e, (o, p)) in sc.manifest.exceptions.iter().zip(sc.corpus.symbol_pairs()) {
            assert_eq!(o.concat(), e.exceptional);
            assert_eq!(o.len(), p.len());
        }
    }

    #[test]
    fn exceptions_are_nested_across_rates() {
        let words = gen_phonology(&small(300, 6)).unwrap();
        let id = RuleTable::identity(6);
        let lo = gen_orthography(&words, &id, 0.25, 9).unwrap().manifest.exceptions;
        let hi = gen_orthography(&words, &id, 0.5, 9).unwrap().manifest.exceptions;
        assert!(lo.iter().all(|e| hi.contains(e)));
        assert!(hi.len() > lo.len());
    }

    #[test]
    fn schedule() {
        for a in [2usize, 5, 20] {
            let l1 = gen_rule_table(1, a, 0).unwrap();
            assert_eq!(l1.len(), a);
            assert!(l1.rules.iter().all(|r| r.phonemes.len() == 1 && r.graphemes.len() == 1));
            let gs: HashSet<_> = l1.rules.iter().map(|r| r.graphemes[0]).collect();
            assert_eq!(gs.len(), a);
            let sizes: Vec<usize> = (1..=5).map(|l| gen_rule_table(l, a, 0).unwrap().len()).collect();
            assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
            assert!(sizes[4] > sizes[0]);
        }
        assert_eq!(gen_rule_table(4, 20, 0).unwrap().max_n(), 3);
        assert_eq!(gen_rule_table(3, 20, 0).unwrap().len(), 40);
        assert!(gen_rule_table(0, 20, 0).is_err());
        assert!(gen_rule_table(6, 20, 0).is_err());
    }

    #[test]
    fn longest_match_first() {
        let t = RuleTable {
            alphabet_size: 2,
            level: 2,
            rules: vec![
                Rule { phonemes: vec![0], graphemes: vec![0] },
                Rule { phonemes: vec![1], graphemes: vec![1] },
                Rule { phonemes: vec![0, 1], graphemes: vec![1, 1] },
            ],
        };
        assert_eq!(t.spell(&[0, 1, 0]).unwrap(), vec![1, 1, 0]);
        assert_eq!(t.spell(&[1, 0, 0]).unwrap(), vec![1, 0, 0]);
    }

    #[test]
    fn generated_tables_spell_everything() {
        let words = gen_phonology(&small(500, 8)).unwrap();
        for level in 1..=5 {
            let t = gen_rule_table(level, 8, level as u64).unwrap();
            t.check_total().unwrap();
            for w in &words {
                assert_eq!(t.spell(w).unwrap(), t.spell(w).unwrap());
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig { rules: RuleSpec::Level(3), epsilon: 0.3, ..small(200, 10) };
        let (a, b) = (generate(&cfg).unwrap(), generate(&cfg).unwrap());
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.manifest, b.manifest);
    }

    #[test]
    fn independent_pairs_share_nothing_by_construction() {
        let c = generate_independent(&small(100, 10)).unwrap();
        assert_eq!(c.len(), 100);
        let same = c.symbol_pairs().iter().filter(|(o, p)| o == p).count();
        assert!(same < 5);
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig { epsilon: 1.5, ..Default::default() }.validate().is_err());
        assert!(SynthConfig { n: 0, ..Default::default() }.validate().is_err());
        assert!(SynthConfig { alphabet_size: 63, ..Default::default() }.validate().is_err());
        assert!(SynthConfig { rules: RuleSpec::Level(9), ..Default::default() }.validate().is_err());
        SynthConfig::default().validate().unwrap();
    }
}
