use std::path::Path;

use mutcomp::prequential::ReplayConfig;
use mutcomp::seqmodel::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::{CliResult, InputContext};

/// Defaults read from the file named by `--config` or `MUTCOMP_CONFIG`.
/// Command-line flags override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub model: ModelConfig,
    pub replay: ReplayConfig,
}

impl Defaults {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).input(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).input(|| format!("parsing config {}", path.display()))
    }
}
