//! Predictive sequence models: given an input sequence and a target prefix
//! they emit a distribution over the next target symbol, and they can be
//! trained one mini-batch at a time.
//!
//! Token conventions shared by every model: the decoder is fed `BOS`
//! followed by the target, `EOS` is appended to the target and scored, and
//! `PAD` positions are never scored. All logarithms are base 2.

mod adam;
mod conv;
mod unigram;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{MASK, NUM_RESERVED};

pub use adam::AdamConfig;
pub use conv::{Checkpoint, ConvSeq2Seq};
pub use unigram::UnigramOracle;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("sequence of length {len} exceeds the maximum of {max}")]
    TooLong { len: usize, max: usize },
    #[error("symbol index {index} outside the {side} vocabulary of size {size}")]
    BadSymbol { index: u32, side: &'static str, size: usize },
    #[error("non-finite {what} at step {step}; update rejected")]
    NonFinite { what: &'static str, step: u64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Replaces any input with the single-symbol sequence `[MASK]`, so a
/// conditional model sees nothing about the input, not even its length.
pub fn mask_input(_input: &[u32]) -> Vec<u32> {
    vec![MASK]
}

/// A mini-batch of (input, target) pairs. Targets exclude `BOS`/`EOS`;
/// models add them. Inputs are already masked when `masked` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    inputs: Vec<Vec<u32>>,
    targets: Vec<Vec<u32>>,
    masked: bool,
}

impl Batch {
    pub fn new(pairs: Vec<(Vec<u32>, Vec<u32>)>, masked: bool) -> Result<Self, ModelError> {
        if pairs.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let (inputs, targets) = pairs
            .into_iter()
            .map(|(i, t)| (if masked { mask_input(&i) } else { i }, t))
            .unzip();
        Ok(Self { inputs, targets, masked })
    }

    pub fn from_slices(pairs: &[(&[u32], &[u32])], masked: bool) -> Result<Self, ModelError> {
        Self::new(pairs.iter().map(|(i, t)| (i.to_vec(), t.to_vec())).collect(), masked)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn masked(&self) -> bool {
        self.masked
    }

    pub fn inputs(&self) -> &[Vec<u32>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<u32>] {
        &self.targets
    }

    /// Number of scored target positions (each target plus its `EOS`).
    pub fn scored_positions(&self) -> usize {
        self.targets.iter().map(|t| t.len() + 1).sum()
    }
}

/// The interface the prequential coder drives.
pub trait SequenceModel {
    /// Size of the output vocabulary, reserved symbols included.
    fn output_vocab(&self) -> usize;

    /// Base-2 log-probabilities of the symbol following `prefix`.
    fn next_symbol_logprobs(&self, input: &[u32], prefix: &[u32]) -> Result<Vec<f64>, ModelError>;

    /// Code length in bits of every target in the batch under the current
    /// state, without updating it.
    fn batch_codelength(&self, batch: &Batch) -> Result<f64, ModelError>;

    /// One training update on `batch`. Returns the mean negative
    /// log-likelihood (bits per scored symbol) before the update.
    fn train_step(&mut self, batch: &Batch) -> Result<f64, ModelError>;
}

/// Hyperparameters of the convolutional encoder-decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub kernel_width: usize,
    pub input_vocab: usize,
    pub output_vocab: usize,
    pub max_len: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 100,
            hidden_dim: 100,
            encoder_layers: 1,
            decoder_layers: 1,
            kernel_width: 3,
            input_vocab: 0,
            output_vocab: 0,
            max_len: 64,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn with_vocab(mut self, input_vocab: usize, output_vocab: usize) -> Self {
        self.input_vocab = input_vocab;
        self.output_vocab = output_vocab;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return err("dimensions must be positive");
        }
        if self.encoder_layers != 1 || self.decoder_layers != 1 {
            return err("only one encoder and one decoder layer are supported");
        }
        if self.kernel_width == 0 || self.kernel_width % 2 == 0 {
            return err("kernel width must be odd");
        }
        if self.input_vocab <= NUM_RESERVED as usize || self.output_vocab <= NUM_RESERVED as usize {
            return err("vocabularies must contain at least one data symbol");
        }
        if self.max_len == 0 {
            return err("max_len must be positive");
        }
        self.optimizer.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        crate::digest::sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}
