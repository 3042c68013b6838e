use std::path::{Path, PathBuf};

use clap::Args;
use mutcomp::digest::sha256_hex;
use serde::{Deserialize, Serialize};

use crate::{ingest, measure, report, validate, CliError, CliResult, InputContext};

/// How the replay streams and intervals were computed; the method has
/// choices the underlying description leaves open.
pub const METHOD_NOTES: [&str; 3] = [
    "replay streams: cursor over coded batches, one step per active stream per iteration, cyclic advance, \
     independent reset to the first batch with probability 1/(i+1) after iteration i (1-indexed)",
    "confidence intervals: two-sided 95% Student t interval over seeds, per language and direction",
    "pairwise tests: one-way Tukey HSD per direction, studentized-range tail by adaptive Simpson quadrature",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Everything needed to repeat a command: its resolved settings and the
/// digests of the files it read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub settings: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub seeds: Vec<u64>,
    pub timestamp: String,
    pub outcomes: Vec<Outcome>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new<S: Serialize>(command: &str, settings: &S) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            settings: serde_json::to_value(settings).expect("settings serialize"),
            inputs: Vec::new(),
            seeds: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outcomes: Vec::new(),
            notes: METHOD_NOTES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, &(serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"))
    }
}

/// Reads a whole input file and records its digest.
pub fn read_input(path: &Path, inputs: &mut Vec<InputDigest>) -> CliResult<Vec<u8>> {
    let bytes = std::fs::read(path).input(|| format!("reading {}", path.display()))?;
    inputs.push(InputDigest { path: path.to_path_buf(), sha256: sha256_hex(&bytes) });
    Ok(bytes)
}

pub fn read_text(path: &Path, inputs: &mut Vec<InputDigest>) -> CliResult<String> {
    let bytes = read_input(path, inputs)?;
    String::from_utf8(bytes).input(|| format!("{} is not UTF-8", path.display()))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).input(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).input(|| format!("writing {}", path.display()))
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier command.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the original location.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn settings<T: serde::de::DeserializeOwned>(m: &RunManifest) -> CliResult<T> {
    serde_json::from_value(m.settings.clone()).input(|| format!("manifest settings for {:?}", m.command))
}

pub fn rerun(args: &RerunArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.manifest).input(|| format!("reading {}", args.manifest.display()))?;
    let m: RunManifest = serde_json::from_str(&text).input(|| format!("parsing {}", args.manifest.display()))?;
    for input in &m.inputs {
        let bytes = std::fs::read(&input.path).input(|| format!("reading {}", input.path.display()))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Input(anyhow::anyhow!(
                "{} changed since the manifest was written (sha256 mismatch)",
                input.path.display()
            )));
        }
    }
    match m.command.as_str() {
        "ingest" => {
            let mut s: ingest::IngestSettings = settings(&m)?;
            if let Some(out) = &args.out {
                s.out = out.clone();
            }
            ingest::execute(&s)
        }
        "measure" => {
            let mut s: measure::MeasureSettings = settings(&m)?;
            if let Some(out) = &args.out {
                s.out = out.clone();
            }
            measure::execute(&s)
        }
        "validate" => {
            let mut s: validate::ValidateSettings = settings(&m)?;
            if let Some(out) = &args.out {
                s.out = out.clone();
            }
            validate::execute(&s)
        }
        "report" => {
            let mut s: report::ReportSettings = settings(&m)?;
            if let Some(out) = &args.out {
                s.out = out.clone();
            }
            report::execute(&s)
        }
        other => Err(CliError::Input(anyhow::anyhow!("unknown command {other:?} in manifest"))),
    }
}
