//! Sub-character decomposition of orthographic strings so model inputs
//! reflect structure a reader can see: Hangul jamo, Han character
//! components and canonical (NFD) decomposition.

mod hangul;
mod hanzi;
mod nfd;

use thiserror::Error;

use crate::corpus::{orth_symbols, CorpusError, PairedCorpus};

pub use hangul::{decompose_hangul, is_syllable as is_hangul_syllable, syllable_jamo};
pub use hanzi::{decompose_hanzi, load_hanzi_table, HanziDepth, HanziTable};
pub use nfd::nfd_normalize;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("hanzi table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("hanzi table: {0} decomposes into itself")]
    SelfLoop(char),
    #[error("hanzi table: decomposition cycle through {0}")]
    Cycle(char),
    #[error("hanzi decomposition requested but no table was supplied")]
    MissingTable,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Which decomposition stages to run. Stages always run in the order
/// hangul, hanzi, nfd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecomposeConfig {
    pub hangul: bool,
    pub hanzi: Option<HanziDepth>,
    pub nfd: bool,
}

impl DecomposeConfig {
    pub fn is_identity(&self) -> bool {
        !self.hangul && self.hanzi.is_none() && !self.nfd
    }

    fn steps(&self) -> Vec<String> {
        let mut steps = Vec::new();
        if self.hangul {
            steps.push("hangul".to_string());
        }
        if let Some(d) = self.hanzi {
            steps.push(format!("hanzi:{d}"));
        }
        if self.nfd {
            steps.push("nfd".to_string());
        }
        steps
    }
}

/// Transforms every orthographic string of `corpus` and rebuilds the
/// vocabularies. Stages already recorded in the corpus pipeline are skipped,
/// so applying the same configuration twice is a no-op the second time.
pub fn apply_decomposition_pipeline(
    corpus: &PairedCorpus,
    config: &DecomposeConfig,
    table: Option<&HanziTable>,
) -> Result<PairedCorpus, DecomposeError> {
    let pending: Vec<String> =
        config.steps().into_iter().filter(|s| !corpus.pipeline().contains(s)).collect();
    if pending.is_empty() {
        return Ok(corpus.clone());
    }
    let run = |step: &str| pending.iter().any(|s| s == step);
    let hanzi = match config.hanzi {
        Some(depth) if run(&format!("hanzi:{depth}")) => {
            Some((table.ok_or(DecomposeError::MissingTable)?, depth))
        }
        _ => None,
    };
    let transform = |word: &str| -> String {
        let mut w = word.to_string();
        if config.hangul && run("hangul") {
            w = decompose_hangul(&w);
        }
        if let Some((t, depth)) = hanzi {
            w = decompose_hanzi(&w, t, depth);
        }
        if config.nfd && run("nfd") {
            w = nfd_normalize(&w);
        }
        w
    };
    let pairs: Vec<(Vec<String>, Vec<String>)> = corpus
        .symbol_pairs()
        .into_iter()
        .map(|(o, p)| (orth_symbols(&transform(&o.concat())), p))
        .collect();
    let mut out = corpus.rebuild(&pairs)?;
    for step in pending {
        out.push_pipeline_step(step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusMeta;

    fn korean() -> PairedCorpus {
        PairedCorpus::from_words(
            CorpusMeta::new("ko", Default::default()),
            &[("한국", vec!["h", "a", "n", "ɡ", "u", "k"]), ("café", vec!["k", "a", "p", "e"])],
        )
        .unwrap()
    }

    #[test]
    fn identity_config() {
        let c = korean();
        let out = apply_decomposition_pipeline(&c, &DecomposeConfig::default(), None).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn hangul_and_nfd() {
        let c = korean();
        let cfg = DecomposeConfig { hangul: true, hanzi: None, nfd: true };
        let out = apply_decomposition_pipeline(&c, &cfg, None).unwrap();
        assert_eq!(out.orth_strings(), vec!["ㅎㅏㄴㄱㅜㄱ", "cafe\u{301}"]);
        assert_eq!(out.pipeline(), ["hangul", "nfd"]);
        assert_eq!(out.len(), c.len());
        let again = apply_decomposition_pipeline(&out, &cfg, None).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn hanzi_needs_table() {
        let c = korean();
        let cfg = DecomposeConfig { hanzi: Some(HanziDepth::OneLevel), ..Default::default() };
        assert!(matches!(
            apply_decomposition_pipeline(&c, &cfg, None),
            Err(DecomposeError::MissingTable)
        ));
    }

    #[test]
    fn one_level_pipeline_is_idempotent() {
        let table = HanziTable::from_pairs([('语', "⿰讠吾"), ('吾', "⿱五口")]).unwrap();
        let c = PairedCorpus::from_words(CorpusMeta::new("zh", Default::default()), &[("语", vec!["y"])])
            .unwrap();
        let cfg = DecomposeConfig { hanzi: Some(HanziDepth::OneLevel), nfd: true, ..Default::default() };
        let once = apply_decomposition_pipeline(&c, &cfg, Some(&table)).unwrap();
        assert_eq!(once.orth_strings(), vec!["⿰讠吾"]);
        let twice = apply_decomposition_pipeline(&once, &cfg, Some(&table)).unwrap();
        assert_eq!(twice, once);
    }
}
