//! Component decomposition of Han characters from a makemeahanzi-style
//! JSON-lines database.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use super::DecomposeError;

/// Decomposition strings that mean "no known decomposition".
const PLACEHOLDERS: [&str; 2] = ["？", "?"];

/// How far to expand a character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HanziDepth {
    /// Replace each character by its first-level decomposition only.
    #[default]
    OneLevel,
    /// Expand components until every one is atomic or absent from the table.
    Recursive,
}

impl FromStr for HanziDepth {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "one-level" | "one" => Ok(Self::OneLevel),
            "recursive" => Ok(Self::Recursive),
            _ => Err(format!("unknown hanzi depth {s:?} (expected one-level|recursive)")),
        }
    }
}

impl fmt::Display for HanziDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OneLevel => "one-level",
            Self::Recursive => "recursive",
        })
    }
}

#[derive(Deserialize)]
struct Record {
    character: String,
    #[serde(default)]
    decomposition: Option<String>,
}

/// Character -> decomposition map. Atomic characters are keys with no
/// decomposition. The table is checked to be acyclic when loaded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HanziTable {
    entries: HashMap<char, Option<String>>,
}

impl HanziTable {
    /// Builds a table from (character, decomposition) pairs, applying the
    /// same placeholder and acyclicity rules as [`load_hanzi_table`].
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, DecomposeError>
    where
        I: IntoIterator<Item = (char, S)>,
        S: Into<String>,
    {
        let mut entries = HashMap::new();
        for (ch, dec) in pairs {
            let dec: String = dec.into();
            let dec = (!dec.is_empty() && !PLACEHOLDERS.contains(&dec.as_str())).then_some(dec);
            if let Some(d) = &dec {
                if d.contains(ch) {
                    return Err(DecomposeError::SelfLoop(ch));
                }
            }
            entries.insert(ch, dec);
        }
        let table = Self { entries };
        table.check_acyclic()?;
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, ch: char) -> bool {
        self.entries.contains_key(&ch)
    }

    /// The decomposition of `ch`, if it is a non-atomic key.
    pub fn get(&self, ch: char) -> Option<&str> {
        self.entries.get(&ch).and_then(|d| d.as_deref())
    }

    pub fn is_atomic(&self, ch: char) -> bool {
        matches!(self.entries.get(&ch), Some(None))
    }

    /// Keys that have a decomposition.
    pub fn decomposable_keys(&self) -> impl Iterator<Item = char> + '_ {
        self.entries.iter().filter(|(_, d)| d.is_some()).map(|(&c, _)| c)
    }

    fn check_acyclic(&self) -> Result<(), DecomposeError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: HashMap<char, Mark> = HashMap::with_capacity(self.entries.len());
        let mut keys: Vec<char> = self.decomposable_keys().collect();
        keys.sort_unstable();
        for root in keys {
            if marks.contains_key(&root) {
                continue;
            }
            // iterative DFS: (node, remaining children)
            let mut stack: Vec<(char, std::vec::IntoIter<char>)> = Vec::new();
            marks.insert(root, Mark::Open);
            stack.push((root, self.children(root)));
            while let Some((node, iter)) = stack.last_mut() {
                match iter.next() {
                    Some(child) => match marks.get(&child) {
                        Some(Mark::Open) => return Err(DecomposeError::Cycle(child)),
                        Some(Mark::Done) => {}
                        None => {
                            marks.insert(child, Mark::Open);
                            let it = self.children(child);
                            stack.push((child, it));
                        }
                    },
                    None => {
                        marks.insert(*node, Mark::Done);
                        stack.pop();
                    }
                }
            }
        }
        Ok(())
    }

    fn children(&self, ch: char) -> std::vec::IntoIter<char> {
        self.get(ch)
            .map(|d| d.chars().filter(|&c| self.get(c).is_some()).collect::<Vec<_>>())
            .unwrap_or_default()
            .into_iter()
    }
}

/// Parses one JSON object per line with `character` and `decomposition`
/// fields; other fields are ignored.
pub fn load_hanzi_table(jsonl: &str) -> Result<HanziTable, DecomposeError> {
    let mut pairs = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line)
            .map_err(|e| DecomposeError::Parse { line: i + 1, message: e.to_string() })?;
        let mut chars = rec.character.chars();
        let ch = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => {
                return Err(DecomposeError::Parse {
                    line: i + 1,
                    message: format!("character {:?} is not a single character", rec.character),
                })
            }
        };
        pairs.push((ch, rec.decomposition.unwrap_or_default()));
    }
    HanziTable::from_pairs(pairs)
}

/// Replaces characters that have a decomposition in `table`. Layout
/// characters (⿰, ⿱, ...) are kept as symbols; characters absent from the
/// table pass through.
pub fn decompose_hanzi(s: &str, table: &HanziTable, depth: HanziDepth) -> String {
    let mut out = String::with_capacity(s.len() * 3);
    for ch in s.chars() {
        expand(ch, table, depth, &mut out);
    }
    out
}

fn expand(ch: char, table: &HanziTable, depth: HanziDepth, out: &mut String) {
    match (table.get(ch), depth) {
        (None, _) => out.push(ch),
        (Some(d), HanziDepth::OneLevel) => out.push_str(d),
        (Some(d), HanziDepth::Recursive) => {
            for c in d.chars() {
                expand(c, table, depth, out);
            }
        }
    }
}
