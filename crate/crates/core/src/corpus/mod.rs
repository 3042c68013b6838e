//! Paired orthography/phonology lexicons: ingestion, frequency-ranked
//! selection, script filtering and the JSON corpus format.

mod lexicon;
mod script;
mod vocab;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexicon::{parse_frequency_list, parse_pron_lexicon, FrequencyTable, LexiconEntry};
pub use script::{filter_by_script, filter_by_symbol, filter_lexicon_by_script, ScriptClass};
pub use vocab::{orth_symbols, SymbolSeq, VocabKind, Vocabulary, BOS, EOS, MASK, NUM_RESERVED, PAD};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid UTF-8 after byte {offset}")]
    Utf8 { offset: usize },
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("corpus would be empty after filtering by {0}")]
    EmptyAfterFilter(String),
    #[error("top-n must be at least 1")]
    ZeroTopN,
    #[error("entry {0} has an empty orthography or pronunciation")]
    EmptySequence(usize),
    #[error("symbol {0:?} collides with a reserved symbol")]
    ReservedSymbol(String),
    #[error("empty symbol")]
    EmptySymbol,
    #[error("symbol {0:?} is not in the vocabulary")]
    UnknownSymbol(String),
    #[error("invalid vocabulary: {0}")]
    BadVocabulary(String),
    #[error("entry {entry}: index {index} is not a data symbol of the {kind:?} vocabulary")]
    BadIndex { entry: usize, index: u32, kind: VocabKind },
    #[error("corpus JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CorpusError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse { line, message: message.into() }
    }
}

/// Whether the phonological side is a broad (phonemic) or narrow
/// (phonetic) transcription. Recorded, never converted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Breadth {
    #[default]
    Broad,
    Narrow,
}

impl FromStr for Breadth {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "broad" => Ok(Self::Broad),
            "narrow" => Ok(Self::Narrow),
            _ => Err(format!("unknown transcription breadth {s:?} (expected broad|narrow)")),
        }
    }
}

impl fmt::Display for Breadth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Broad => "broad",
            Self::Narrow => "narrow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusMeta {
    pub language: String,
    pub breadth: Breadth,
}

impl CorpusMeta {
    pub fn new(language: impl Into<String>, breadth: Breadth) -> Self {
        Self { language: language.into(), breadth }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub orth: SymbolSeq,
    pub phon: SymbolSeq,
}

/// An ordered list of (orthography, pronunciation) pairs with the two
/// vocabularies closed over exactly the symbols that occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedCorpus {
    meta: CorpusMeta,
    vocab_orth: Vocabulary,
    vocab_phon: Vocabulary,
    entries: Vec<CorpusEntry>,
    pipeline: Vec<String>,
}

impl PairedCorpus {
    /// Builds a corpus from symbol-level pairs. Vocabularies are built from
    /// the pairs themselves.
    pub fn from_pairs<S: AsRef<str>>(
        meta: CorpusMeta,
        pairs: &[(Vec<S>, Vec<S>)],
    ) -> Result<Self, CorpusError> {
        if pairs.is_empty() {
            return Err(CorpusError::EmptyLexicon);
        }
        for (i, (o, p)) in pairs.iter().enumerate() {
            if o.is_empty() || p.is_empty() {
                return Err(CorpusError::EmptySequence(i));
            }
        }
        let vocab_orth = Vocabulary::from_symbols(
            VocabKind::Orthographic,
            pairs.iter().flat_map(|(o, _)| o.iter().map(|s| s.as_ref().to_string())),
        )?;
        let vocab_phon = Vocabulary::from_symbols(
            VocabKind::Phonemic,
            pairs.iter().flat_map(|(_, p)| p.iter().map(|s| s.as_ref().to_string())),
        )?;
        let entries = pairs
            .iter()
            .map(|(o, p)| Ok(CorpusEntry { orth: vocab_orth.encode(o)?, phon: vocab_phon.encode(p)? }))
            .collect::<Result<Vec<_>, CorpusError>>()?;
        Ok(Self { meta, vocab_orth, vocab_phon, entries, pipeline: Vec::new() })
    }

    /// Builds a corpus from whole words, splitting orthography into Unicode
    /// scalar values.
    pub fn from_words<W: AsRef<str>, P: AsRef<str>>(
        meta: CorpusMeta,
        words: &[(W, Vec<P>)],
    ) -> Result<Self, CorpusError> {
        let pairs: Vec<(Vec<String>, Vec<String>)> = words
            .iter()
            .map(|(w, p)| (orth_symbols(w.as_ref()), p.iter().map(|s| s.as_ref().to_string()).collect()))
            .collect();
        Self::from_pairs(meta, &pairs)
    }

    pub fn meta(&self) -> &CorpusMeta {
        &self.meta
    }

    pub fn language(&self) -> &str {
        &self.meta.language
    }

    pub fn breadth(&self) -> Breadth {
        self.meta.breadth
    }

    pub fn vocab_orth(&self) -> &Vocabulary {
        &self.vocab_orth
    }

    pub fn vocab_phon(&self) -> &Vocabulary {
        &self.vocab_phon
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Preprocessing steps applied so far, in order.
    pub fn pipeline(&self) -> &[String] {
        &self.pipeline
    }

    pub(crate) fn push_pipeline_step(&mut self, step: impl Into<String>) {
        self.pipeline.push(step.into());
    }

    /// Orthographic forms as strings.
    pub fn orth_strings(&self) -> Vec<String> {
        self.entries.iter().map(|e| self.vocab_orth.decode(&e.orth).concat()).collect()
    }

    /// Symbol-level view of every entry.
    pub fn symbol_pairs(&self) -> Vec<(Vec<String>, Vec<String>)> {
        self.entries
            .iter()
            .map(|e| {
                (
                    self.vocab_orth.decode(&e.orth).into_iter().map(String::from).collect(),
                    self.vocab_phon.decode(&e.phon).into_iter().map(String::from).collect(),
                )
            })
            .collect()
    }

    pub(crate) fn rebuild(
        &self,
        pairs: &[(Vec<String>, Vec<String>)],
    ) -> Result<Self, CorpusError> {
        let mut c = Self::from_pairs(self.meta.clone(), pairs)?;
        c.pipeline = self.pipeline.clone();
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String, CorpusError> {
        Ok(serde_json::to_string(&CorpusFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let file: CorpusFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// On-disk layout of a corpus.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusFile {
    language: String,
    breadth: Breadth,
    vocab_orth: Vec<String>,
    vocab_phon: Vec<String>,
    entries: Vec<(Vec<u32>, Vec<u32>)>,
    #[serde(default)]
    pipeline: Vec<String>,
}

impl From<&PairedCorpus> for CorpusFile {
    fn from(c: &PairedCorpus) -> Self {
        Self {
            language: c.meta.language.clone(),
            breadth: c.meta.breadth,
            vocab_orth: c.vocab_orth.symbols().to_vec(),
            vocab_phon: c.vocab_phon.symbols().to_vec(),
            entries: c
                .entries
                .iter()
                .map(|e| (e.orth.symbols().to_vec(), e.phon.symbols().to_vec()))
                .collect(),
            pipeline: c.pipeline.clone(),
        }
    }
}

impl TryFrom<CorpusFile> for PairedCorpus {
    type Error = CorpusError;

    fn try_from(f: CorpusFile) -> Result<Self, CorpusError> {
        let vocab_orth = Vocabulary::from_table(VocabKind::Orthographic, f.vocab_orth)?;
        let vocab_phon = Vocabulary::from_table(VocabKind::Phonemic, f.vocab_phon)?;
        if f.entries.is_empty() {
            return Err(CorpusError::EmptyLexicon);
        }
        let mut entries = Vec::with_capacity(f.entries.len());
        for (i, (o, p)) in f.entries.into_iter().enumerate() {
            if o.is_empty() || p.is_empty() {
                return Err(CorpusError::EmptySequence(i));
            }
            for (seq, vocab) in [(&o, &vocab_orth), (&p, &vocab_phon)] {
                if let Some(&bad) = seq.iter().find(|&&x| !vocab.is_data_index(x)) {
                    return Err(CorpusError::BadIndex { entry: i, index: bad, kind: vocab.kind() });
                }
            }
            entries.push(CorpusEntry {
                orth: SymbolSeq::new(VocabKind::Orthographic, o),
                phon: SymbolSeq::new(VocabKind::Phonemic, p),
            });
        }
        Ok(Self {
            meta: CorpusMeta { language: f.language, breadth: f.breadth },
            vocab_orth,
            vocab_phon,
            entries,
            pipeline: f.pipeline,
        })
    }
}

/// Result of [`select_top_n`]: the corpus plus how many forms were asked
/// for and how many unique forms existed.
#[derive(Debug, Clone)]
pub struct Selection {
    pub corpus: PairedCorpus,
    pub requested: usize,
    pub available: usize,
}

impl Selection {
    /// Set when fewer unique forms existed than were requested.
    pub fn warning(&self) -> Option<String> {
        (self.available < self.requested).then(|| {
            format!(
                "requested {} forms but only {} unique forms are available",
                self.requested, self.available
            )
        })
    }
}

/// Keeps the first pronunciation of each orthographic form, ranks forms by
/// descending frequency (missing words count 0, ties by ascending word) and
/// keeps the first `n`.
pub fn select_top_n(
    lexicon: &[LexiconEntry],
    freqs: &FrequencyTable,
    n: usize,
    meta: CorpusMeta,
) -> Result<Selection, CorpusError> {
    if n == 0 {
        return Err(CorpusError::ZeroTopN);
    }
    if lexicon.is_empty() {
        return Err(CorpusError::EmptyLexicon);
    }
    let mut seen = HashSet::new();
    let mut unique: Vec<(&LexiconEntry, u64)> = lexicon
        .iter()
        .filter(|e| seen.insert(e.word.as_str()))
        .map(|e| (e, freqs.count(&e.word)))
        .collect();
    let available = unique.len();
    unique.sort_by(|(a, ca), (b, cb)| cb.cmp(ca).then_with(|| a.word.cmp(&b.word)));
    unique.truncate(n);
    let words: Vec<(&str, Vec<String>)> =
        unique.iter().map(|(e, _)| (e.word.as_str(), e.pron.clone())).collect();
    let corpus = PairedCorpus::from_words(meta, &words)?;
    Ok(Selection { corpus, requested: n, available })
}
