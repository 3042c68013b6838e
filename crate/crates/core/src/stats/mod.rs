//! Seed aggregation with t intervals, Tukey HSD pairwise comparisons and
//! the onset-entropy baseline.

pub mod ptukey;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::corpus::PairedCorpus;
use crate::prequential::{Direction, ResultRow};

/// Significance level reported alongside every pairwise p-value.
pub const ALPHA: f64 = 0.05;
/// Coverage of the reported confidence intervals.
pub const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("group {label:?} has {n} value(s); at least 2 are needed")]
    GroupTooSmall { label: String, n: usize },
    #[error("at least 2 groups are needed, got {0}")]
    TooFewGroups(usize),
    #[error("every group has zero variance; the studentized range is undefined")]
    DegenerateVariance,
    #[error("non-finite value in group {0:?}")]
    NonFinite(String),
    #[error("empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub language: String,
    pub direction: Option<Direction>,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The values, in ascending seed order when they come from results.
    pub values: Vec<f64>,
}

impl GroupSummary {
    pub fn label(&self) -> String {
        match self.direction {
            Some(d) => format!("{}/{d}", self.language),
            None => self.language.clone(),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Two-sided t quantile for the configured coverage.
pub fn t_quantile(df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").inverse_cdf(0.5 + CI_LEVEL / 2.0)
}

/// Mean, sample sd (n - 1) and t interval of one group.
pub fn summarize(language: &str, direction: Option<Direction>, values: Vec<f64>) -> Result<GroupSummary, StatsError> {
    let label = language.to_string();
    if values.len() < 2 {
        return Err(StatsError::GroupTooSmall { label, n: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(label));
    }
    let n = values.len();
    let m = mean(&values);
    let sd = (sum_sq_dev(&values, m) / (n - 1) as f64).sqrt();
    let half = t_quantile((n - 1) as f64) * sd / (n as f64).sqrt();
    Ok(GroupSummary {
        language: label,
        direction,
        n,
        mean: m,
        sd,
        ci_low: (m - half).min(m),
        ci_high: (m + half).max(m),
        values,
    })
}

/// One summary per (language, direction), sorted by language then
/// direction. Values are taken in seed order, so the output does not depend
/// on the order of `rows`.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<GroupSummary>, StatsError> {
    let mut groups: BTreeMap<(&str, Direction), Vec<(u64, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.language.as_str(), r.direction)).or_default().push((r.seed, r.c));
    }
    groups
        .into_iter()
        .map(|((lang, dir), mut v)| {
            v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            summarize(lang, Some(dir), v.into_iter().map(|(_, c)| c).collect())
        })
        .collect()
}

/// Standard error of the difference of two group means, from the two
/// groups' sample variances.
pub fn pooled_se(a: &[f64], b: &[f64]) -> f64 {
    let var = |xs: &[f64]| sum_sq_dev(xs, mean(xs)) / (xs.len() as f64 - 1.0);
    (var(a) / a.len() as f64 + var(b) / b.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEntry {
    pub row: String,
    pub col: String,
    /// `mean(row) - mean(col)`.
    pub diff: f64,
    pub q: f64,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTable {
    /// Every ordered pair of distinct groups, row-major in input order.
    pub entries: Vec<PairwiseEntry>,
    pub mse: f64,
    pub df: f64,
}

impl PairwiseTable {
    pub fn get(&self, row: &str, col: &str) -> Option<&PairwiseEntry> {
        self.entries.iter().find(|e| e.row == row && e.col == col)
    }

    /// `row,col,diff,p`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["row", "col", "diff", "p"]).expect("in-memory write");
        for e in &self.entries {
            w.serialize((&e.row, &e.col, e.diff, e.p)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// One-way Tukey HSD (Tukey-Kramer for unequal sizes): pooled within-group
/// mean square, `q = |diff| / sqrt(MSE / 2 * (1/n_i + 1/n_j))`, and
/// `p = P(Q ≥ q)` for the studentized range with `k` groups and `N - k`
/// degrees of freedom.
pub fn tukey_hsd(groups: &[(String, Vec<f64>)]) -> Result<PairwiseTable, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for (label, v) in groups {
        if v.len() < 2 {
            return Err(StatsError::GroupTooSmall { label: label.clone(), n: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFinite(label.clone()));
        }
    }
    let k = groups.len();
    let total: usize = groups.iter().map(|(_, v)| v.len()).sum();
    let means: Vec<f64> = groups.iter().map(|(_, v)| mean(v)).collect();
    let ss: f64 = groups.iter().zip(&means).map(|((_, v), &m)| sum_sq_dev(v, m)).sum();
    let df = (total - k) as f64;
    let mse = ss / df;
    if mse <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let mut p_cache: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    let mut entries = Vec::with_capacity(k * (k - 1));
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let (q, p) = *p_cache.entry((i.min(j), i.max(j))).or_insert_with(|| {
                let (ni, nj) = (groups[i].1.len() as f64, groups[j].1.len() as f64);
                let se = (mse / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
                let q = (means[i] - means[j]).abs() / se;
                (q, ptukey::ptukey_upper(q, k, df))
            });
            entries.push(PairwiseEntry {
                row: groups[i].0.clone(),
                col: groups[j].0.clone(),
                diff: means[i] - means[j],
                q,
                p,
                significant: p < ALPHA,
            });
        }
    }
    Ok(PairwiseTable { entries, mse, df })
}

fn entropy_bits(counts: impl Iterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.collect();
    let n: usize = counts.iter().sum();
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum();
    // -0.0 from a single certain outcome
    h.max(0.0)
}

/// Mean over source symbols of the entropy (bits) of the first target
/// symbol among words starting with that source symbol. Each first source
/// symbol counts once regardless of how many words start with it.
pub fn onset_entropy(corpus: &PairedCorpus, direction: Direction) -> Result<f64, StatsError> {
    if corpus.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let mut table: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
    for (src, tgt) in direction.pairs(corpus) {
        if let (Some(&s), Some(&t)) = (src.first(), tgt.first()) {
            *table.entry(s).or_default().entry(t).or_default() += 1;
        }
    }
    if table.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let total: f64 = table.values().map(|row| entropy_bits(row.values().copied())).sum();
    Ok(total / table.len() as f64)
}
