use std::fmt;
use std::str::FromStr;

use super::{CorpusError, LexiconEntry, PairedCorpus};

/// Unicode-block based character classes used to split mixed-script
/// orthographies such as Japanese.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScriptClass {
    Hiragana,
    Katakana,
    Han,
    /// Anything not in the three classes above.
    Other,
}

impl ScriptClass {
    pub fn of(ch: char) -> Self {
        match ch as u32 {
            0x3040..=0x309F | 0x1B001..=0x1B11F => Self::Hiragana,
            0x30A0..=0x30FF | 0x31F0..=0x31FF | 0xFF66..=0xFF9F | 0x1B000 => Self::Katakana,
            0x3005 | 0x3007 | 0x3021..=0x3029 | 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF
            | 0x20000..=0x3134F => Self::Han,
            _ => Self::Other,
        }
    }

    pub fn contains(self, ch: char) -> bool {
        Self::of(ch) == self
    }
}

impl FromStr for ScriptClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hiragana" => Ok(Self::Hiragana),
            "katakana" => Ok(Self::Katakana),
            "han" | "kanji" | "hanzi" => Ok(Self::Han),
            "other" => Ok(Self::Other),
            _ => Err(format!("unknown script class {s:?} (expected hiragana|katakana|han|other)")),
        }
    }
}

impl fmt::Display for ScriptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hiragana => "hiragana",
            Self::Katakana => "katakana",
            Self::Han => "han",
            Self::Other => "other",
        })
    }
}

/// Keeps entries whose orthographic symbols all satisfy `pred`. Order is
/// preserved and vocabularies are rebuilt from the survivors.
pub fn filter_by_symbol<F>(corpus: &PairedCorpus, name: &str, pred: F) -> Result<PairedCorpus, CorpusError>
where
    F: Fn(&str) -> bool,
{
    let keep: Vec<(Vec<String>, Vec<String>)> = corpus
        .symbol_pairs()
        .into_iter()
        .filter(|(o, _)| o.iter().all(|s| pred(s)))
        .collect();
    if keep.is_empty() {
        return Err(CorpusError::EmptyAfterFilter(name.to_string()));
    }
    let mut out = corpus.rebuild(&keep)?;
    out.push_pipeline_step(format!("script:{name}"));
    Ok(out)
}

/// Keeps entries written entirely in `class`.
pub fn filter_by_script(corpus: &PairedCorpus, class: ScriptClass) -> Result<PairedCorpus, CorpusError> {
    filter_by_symbol(corpus, &class.to_string(), |s| s.chars().all(|c| class.contains(c)))
}

/// Lexicon entries whose word is written entirely in `class`. Filtering
/// before frequency ranking makes the top-n count only words of that script.
pub fn filter_lexicon_by_script(lexicon: &[LexiconEntry], class: ScriptClass) -> Vec<LexiconEntry> {
    lexicon.iter().filter(|e| e.word.chars().all(|c| class.contains(c))).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusMeta;

    fn japanese() -> PairedCorpus {
        PairedCorpus::from_words(
            CorpusMeta::new("ja", Default::default()),
            &[
                ("テレビ", vec!["t", "e", "ɾ", "e", "b", "i"]),
                ("日本", vec!["n", "i", "h", "o", "N"]),
                ("ねこ", vec!["n", "e", "k", "o"]),
                ("コーヒー", vec!["k", "o", "ː", "h", "i", "ː"]),
                ("食べる", vec!["t", "a", "b", "e", "ɾ", "u"]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn classes() {
        assert_eq!(ScriptClass::of('ア'), ScriptClass::Katakana);
        assert_eq!(ScriptClass::of('ー'), ScriptClass::Katakana);
        assert_eq!(ScriptClass::of('あ'), ScriptClass::Hiragana);
        assert_eq!(ScriptClass::of('漢'), ScriptClass::Han);
        assert_eq!(ScriptClass::of('々'), ScriptClass::Han);
        assert_eq!(ScriptClass::of('a'), ScriptClass::Other);
    }

    #[test]
    fn katakana_subset() {
        let c = japanese();
        let k = filter_by_script(&c, ScriptClass::Katakana).unwrap();
        assert_eq!(k.orth_strings(), vec!["テレビ", "コーヒー"]);
        assert_eq!(k.pipeline(), ["script:katakana"]);
        let h = filter_by_script(&c, ScriptClass::Han).unwrap();
        assert_eq!(h.orth_strings(), vec!["日本"]);
    }

    #[test]
    fn identity_and_empty_filters() {
        let c = japanese();
        let all = filter_by_symbol(&c, "any", |_| true).unwrap();
        assert_eq!(all.entries(), c.entries());
        assert_eq!(all.vocab_orth(), c.vocab_orth());
        let err = filter_by_symbol(&c, "none", |_| false).unwrap_err();
        assert!(err.to_string().contains("none"));
    }

    #[test]
    fn lexicon_filter() {
        let lex = [LexiconEntry::new("テレビ", &["t"]), LexiconEntry::new("日本", &["n"]), LexiconEntry::new("ラ", &["r"])];
        let k = filter_lexicon_by_script(&lex, ScriptClass::Katakana);
        assert_eq!(k.iter().map(|e| e.word.as_str()).collect::<Vec<_>>(), ["テレビ", "ラ"]);
    }
}
