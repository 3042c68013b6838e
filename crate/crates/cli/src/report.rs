use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use mutcomp::corpus::PairedCorpus;
use mutcomp::prequential::{Direction, ResultRow};
use mutcomp::stats::{aggregate, onset_entropy, tukey_hsd, GroupSummary, StatsError};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::{read_text, write_file, Outcome, RunManifest};
use crate::{CliError, CliResult, InputContext};

/// Columns every results file must have.
pub const RESULT_COLUMNS: [&str; 7] = ["language", "direction", "seed", "L_cond", "L_uncond", "C", "I_bits"];

pub const PLOT_SCHEMA: &str = include_str!("../schema/plot_spec.schema.json");

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results CSV files written by `measure`.
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
    /// Corpus JSON files for the onset-entropy comparison.
    #[arg(long, num_args = 1..)]
    corpus: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub results: Vec<PathBuf>,
    pub corpus: Vec<PathBuf>,
    pub out: PathBuf,
}

impl ReportArgs {
    pub fn resolve(&self) -> ReportSettings {
        ReportSettings { results: self.results.clone(), corpus: self.corpus.clone(), out: self.out.clone() }
    }
}

fn parse_results(path: &std::path::Path, text: &str) -> CliResult<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().input(|| format!("{}: reading header", path.display()))?.clone();
    if let Some(missing) = RESULT_COLUMNS.iter().find(|c| !headers.iter().any(|h| h == **c)) {
        return Err(CliError::Input(anyhow::anyhow!(
            "{}: incompatible results schema, missing column {missing:?}",
            path.display()
        )));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.input(|| format!("{}: row {}", path.display(), i + 2)))
        .collect()
}

fn summary_csv(groups: &[GroupSummary]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["language", "direction", "n", "mean", "sd", "ci_low", "ci_high"]).expect("in-memory write");
    for g in groups {
        let dir = g.direction.map(|d| d.to_string()).unwrap_or_default();
        w.serialize((&g.language, dir, g.n, g.mean, g.sd, g.ci_low, g.ci_high)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Grouped interval chart: one point with a 95% interval per language,
/// side by side per direction.
pub fn plot_spec(groups: &[GroupSummary]) -> serde_json::Value {
    let values: Vec<_> = groups
        .iter()
        .map(|g| {
            json!({
                "language": g.language,
                "direction": g.direction.map(|d| d.to_string()),
                "n": g.n,
                "mean": g.mean,
                "ci_low": g.ci_low,
                "ci_high": g.ci_high,
            })
        })
        .collect();
    json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "description": "Mean mutual compressibility per language and direction with 95% t intervals over seeds",
        "data": { "values": values },
        "encoding": {
            "x": { "field": "language", "type": "nominal", "title": "language" },
            "xOffset": { "field": "direction", "type": "nominal" },
            "color": { "field": "direction", "type": "nominal", "title": "direction" }
        },
        "layer": [
            {
                "mark": { "type": "point", "filled": true },
                "encoding": { "y": { "field": "mean", "type": "quantitative", "title": "mutual compressibility C" } }
            },
            {
                "mark": { "type": "errorbar" },
                "encoding": {
                    "y": { "field": "ci_low", "type": "quantitative" },
                    "y2": { "field": "ci_high" }
                }
            }
        ]
    })
}

pub fn execute(s: &ReportSettings) -> CliResult<()> {
    let mut manifest = RunManifest::new("report", s);
    let mut rows = Vec::new();
    for path in &s.results {
        let text = read_text(path, &mut manifest.inputs)?;
        rows.extend(parse_results(path, &text)?);
    }
    let groups = aggregate(&rows).input(|| "aggregating results".into())?;
    write_file(&s.out.join("summary.csv"), &summary_csv(&groups))?;
    let spec = serde_json::to_string_pretty(&plot_spec(&groups)).expect("spec serializes");
    write_file(&s.out.join("plot_spec.json"), &(spec + "\n"))?;
    write_file(&s.out.join("plot_spec.schema.json"), PLOT_SCHEMA)?;

    for dir in Direction::BOTH {
        let by_dir: Vec<(String, Vec<f64>)> = groups
            .iter()
            .filter(|g| g.direction == Some(dir))
            .map(|g| (g.language.clone(), g.values.clone()))
            .collect();
        let label = format!("pairwise {dir}");
        match tukey_hsd(&by_dir) {
            Ok(table) => {
                write_file(&s.out.join(format!("pairwise_{dir}.csv")), &table.to_csv())?;
                manifest.outcomes.push(Outcome {
                    label,
                    ok: true,
                    message: Some(format!("{} ordered pairs", table.entries.len())),
                });
            }
            Err(StatsError::TooFewGroups(n)) => {
                manifest.outcomes.push(Outcome {
                    label,
                    ok: true,
                    message: Some(format!("skipped: {n} language(s) in this direction")),
                });
            }
            Err(e) => {
                eprintln!("warning: {label}: {e}");
                manifest.outcomes.push(Outcome { label, ok: false, message: Some(e.to_string()) });
            }
        }
    }

    if !s.corpus.is_empty() {
        let means: BTreeMap<(String, Direction), f64> = groups
            .iter()
            .filter_map(|g| g.direction.map(|d| ((g.language.clone(), d), g.mean)))
            .collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["language", "direction", "onset_entropy", "mean_C"]).expect("in-memory write");
        for path in &s.corpus {
            let text = read_text(path, &mut manifest.inputs)?;
            let corpus = PairedCorpus::from_json(&text).input(|| format!("{}", path.display()))?;
            for dir in Direction::BOTH {
                let h = onset_entropy(&corpus, dir).input(|| format!("{}", path.display()))?;
                let c = means.get(&(corpus.language().to_string(), dir)).map(|c| c.to_string()).unwrap_or_default();
                w.serialize((corpus.language(), dir.to_string(), h, c)).expect("in-memory write");
            }
        }
        let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8");
        write_file(&s.out.join("onset_entropy.csv"), &csv)?;
    }
    manifest.write(&s.out.join("manifest.json"))?;
    eprintln!("{} group(s) summarized into {}", groups.len(), s.out.display());
    Ok(())
}
