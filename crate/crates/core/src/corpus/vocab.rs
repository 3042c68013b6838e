use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Index of the padding symbol in every vocabulary.
pub const PAD: u32 = 0;
/// Index of the begin-of-sequence symbol.
pub const BOS: u32 = 1;
/// Index of the end-of-sequence symbol.
pub const EOS: u32 = 2;
/// Index of the mask symbol standing in for a hidden input.
pub const MASK: u32 = 3;
/// Number of reserved symbols; data symbols start at this index.
pub const NUM_RESERVED: u32 = 4;

pub(crate) const RESERVED_NAMES: [&str; NUM_RESERVED as usize] = ["<pad>", "<s>", "</s>", "<mask>"];

/// Which side of the pairing a vocabulary belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabKind {
    Orthographic,
    Phonemic,
}

/// Bidirectional symbol <-> index map with the reserved symbols at 0..4.
///
/// Data symbols are stored in sorted order so a vocabulary built from the
/// same set of symbols is identical regardless of the order they were seen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    kind: VocabKind,
    symbols: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_symbols<I, S>(kind: VocabKind, symbols: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = symbols.into_iter().map(Into::into).collect();
        let mut all: Vec<String> = RESERVED_NAMES.iter().map(|s| s.to_string()).collect();
        for sym in set {
            if RESERVED_NAMES.contains(&sym.as_str()) {
                return Err(CorpusError::ReservedSymbol(sym));
            }
            if sym.is_empty() {
                return Err(CorpusError::EmptySymbol);
            }
            all.push(sym);
        }
        Self::from_table(kind, all)
    }

    /// Rebuilds a vocabulary from its full index table (reserved symbols
    /// included), as stored in serialized corpora.
    pub fn from_table(kind: VocabKind, symbols: Vec<String>) -> Result<Self, CorpusError> {
        if symbols.len() < NUM_RESERVED as usize
            || symbols[..NUM_RESERVED as usize] != RESERVED_NAMES[..]
        {
            return Err(CorpusError::BadVocabulary("reserved symbols missing or out of place".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i as u32).is_some() {
                return Err(CorpusError::BadVocabulary(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { kind, symbols, index })
    }

    pub fn kind(&self) -> VocabKind {
        self.kind
    }

    /// Total size including reserved symbols.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.len() == NUM_RESERVED as usize
    }

    /// Number of data (non-reserved) symbols.
    pub fn data_len(&self) -> usize {
        self.symbols.len() - NUM_RESERVED as usize
    }

    pub fn index_of(&self, symbol: &str) -> Option<u32> {
        self.index.get(symbol).copied().filter(|&i| i >= NUM_RESERVED)
    }

    pub fn symbol(&self, index: u32) -> Option<&str> {
        self.symbols.get(index as usize).map(String::as_str)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn is_data_index(&self, index: u32) -> bool {
        index >= NUM_RESERVED && (index as usize) < self.symbols.len()
    }

    pub fn encode<S: AsRef<str>>(&self, symbols: &[S]) -> Result<SymbolSeq, CorpusError> {
        let indices = symbols
            .iter()
            .map(|s| {
                self.index_of(s.as_ref())
                    .ok_or_else(|| CorpusError::UnknownSymbol(s.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SymbolSeq::new(self.kind, indices))
    }

    pub fn decode(&self, seq: &SymbolSeq) -> Vec<&str> {
        seq.symbols().iter().map(|&i| self.symbols[i as usize].as_str()).collect()
    }
}

/// A sequence of vocabulary indices tagged with the vocabulary it indexes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolSeq {
    kind: VocabKind,
    symbols: Vec<u32>,
}

impl SymbolSeq {
    pub fn new(kind: VocabKind, symbols: Vec<u32>) -> Self {
        Self { kind, symbols }
    }

    pub fn kind(&self) -> VocabKind {
        self.kind
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Splits an orthographic string into one symbol per Unicode scalar value.
pub fn orth_symbols(word: &str) -> Vec<String> {
    word.chars().map(String::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_symbols_come_first() {
        let v = Vocabulary::from_symbols(VocabKind::Phonemic, ["t", "k", "æ"]).unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(v.symbol(EOS), Some("</s>"));
        assert_eq!(v.index_of("k"), Some(4));
        assert_eq!(v.index_of("<pad>"), None);
    }

    #[test]
    fn build_is_order_independent() {
        let a = Vocabulary::from_symbols(VocabKind::Orthographic, ["b", "a", "c"]).unwrap();
        let b = Vocabulary::from_symbols(VocabKind::Orthographic, ["c", "b", "a", "a"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_reserved_in_data() {
        assert!(Vocabulary::from_symbols(VocabKind::Orthographic, ["<mask>"]).is_err());
    }

    #[test]
    fn encode_decode() {
        let v = Vocabulary::from_symbols(VocabKind::Phonemic, ["k", "æ", "t"]).unwrap();
        let s = v.encode(&["k", "æ", "t"]).unwrap();
        assert_eq!(v.decode(&s), vec!["k", "æ", "t"]);
        assert!(v.encode(&["q"]).is_err());
    }
}
