//! Readers for the two text inputs: a pronunciation lexicon in the
//! WikiPron two-column layout and a word frequency list.

use std::collections::BTreeMap;

use super::CorpusError;

/// One line of a pronunciation lexicon.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub word: String,
    pub pron: Vec<String>,
}

impl LexiconEntry {
    pub fn new(word: impl Into<String>, pron: &[&str]) -> Self {
        Self { word: word.into(), pron: pron.iter().map(|s| s.to_string()).collect() }
    }
}

/// Word counts. Words are unique; duplicates in the source are summed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<String, u64>,
}

impl FrequencyTable {
    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, word: impl Into<String>, count: u64) {
        *self.counts.entry(word.into()).or_insert(0) += count;
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }
}

impl<S: Into<String>> FromIterator<(S, u64)> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut table = Self::default();
        for (w, c) in iter {
            table.insert(w, c);
        }
        table
    }
}

fn decode(bytes: &[u8]) -> Result<&str, CorpusError> {
    std::str::from_utf8(bytes).map_err(|e| CorpusError::Utf8 { offset: e.valid_up_to() })
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn split_pair(line: usize, l: &str) -> Result<(&str, &str), CorpusError> {
    let (left, right) = l.split_once('\t').ok_or_else(|| CorpusError::parse(line, "missing TAB separator"))?;
    if right.contains('\t') {
        return Err(CorpusError::parse(line, "more than two TAB-separated fields"));
    }
    if left.is_empty() {
        return Err(CorpusError::parse(line, "empty first field"));
    }
    if right.is_empty() {
        return Err(CorpusError::parse(line, "empty second field"));
    }
    Ok((left, right))
}

/// Parses `word<TAB>seg1 seg2 ...` lines. All records are kept in file order,
/// including repeated words.
pub fn parse_pron_lexicon(input: impl AsRef<[u8]>) -> Result<Vec<LexiconEntry>, CorpusError> {
    let text = decode(input.as_ref())?;
    data_lines(text)
        .map(|(line, l)| {
            let (word, pron) = split_pair(line, l)?;
            let segments: Vec<String> = pron.split(' ').map(str::to_string).collect();
            if segments.iter().any(String::is_empty) {
                return Err(CorpusError::parse(line, "empty IPA segment"));
            }
            Ok(LexiconEntry { word: word.to_string(), pron: segments })
        })
        .collect()
}

/// Parses `word<TAB>count` lines; counts of repeated words are summed.
pub fn parse_frequency_list(input: impl AsRef<[u8]>) -> Result<FrequencyTable, CorpusError> {
    let text = decode(input.as_ref())?;
    let mut table = FrequencyTable::default();
    for (line, l) in data_lines(text) {
        let (word, count) = split_pair(line, l)?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| CorpusError::parse(line, format!("count {count:?} is not a non-negative integer")))?;
        table.insert(word, count);
    }
    Ok(table)
}
