use std::path::PathBuf;

use clap::Args;
use mutcomp::synthetic::validate::{run_validation, ValidationConfig};
use serde::{Deserialize, Serialize};

use crate::manifest::{read_text, write_file, Outcome, RunManifest};
use crate::{CliError, CliResult, Defaults, InputContext};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Validation config (JSON); omitted fields take their defaults.
    #[arg(long)]
    synth_config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateSettings {
    pub synth_config: Option<PathBuf>,
    pub defaults: Defaults,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

impl ValidateArgs {
    pub fn resolve(&self, defaults: &Defaults) -> CliResult<ValidateSettings> {
        Ok(ValidateSettings {
            synth_config: self.synth_config.clone(),
            defaults: defaults.clone(),
            workers: self.workers,
            out: self.out.clone(),
        })
    }
}

pub fn execute(s: &ValidateSettings) -> CliResult<()> {
    let mut manifest = RunManifest::new("validate", s);
    let mut config = match &s.synth_config {
        Some(path) => {
            let text = read_text(path, &mut manifest.inputs)?;
            serde_json::from_str::<ValidationConfig>(&text).input(|| format!("parsing {}", path.display()))?
        }
        None => ValidationConfig { model: s.defaults.model.clone(), replay: s.defaults.replay.clone(), ..Default::default() },
    };
    if let Some(w) = s.workers {
        config.workers = w.max(1);
    }
    config.validate().input(|| "validation config".into())?;
    manifest.seeds = config.seeds.clone();
    let report = run_validation(&config).map_err(|e| CliError::Failure(e.into()))?;
    let text = report.text();
    print!("{text}");
    write_file(&s.out.join("report.txt"), &text)?;
    write_file(&s.out.join("report.json"), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    for c in &report.checks {
        manifest.outcomes.push(Outcome { label: c.name.clone(), ok: c.passed, message: Some(c.detail.clone()) });
    }
    manifest.write(&s.out.join("manifest.json"))?;
    if !report.passed() {
        return Err(CliError::Failure(anyhow::anyhow!("one or more validation properties failed")));
    }
    Ok(())
}
