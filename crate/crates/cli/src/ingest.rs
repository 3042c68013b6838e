use std::path::PathBuf;

use clap::Args;
use mutcomp::corpus::{
    filter_by_script, filter_lexicon_by_script, parse_frequency_list, parse_pron_lexicon, select_top_n, Breadth,
    CorpusMeta, ScriptClass,
};
use mutcomp::decompose::{apply_decomposition_pipeline, load_hanzi_table, DecomposeConfig, HanziDepth};
use serde::{Deserialize, Serialize};

use crate::manifest::{read_input, read_text, write_file, Outcome, RunManifest};
use crate::{CliError, CliResult, InputContext};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tab-separated pronunciation lexicon: word, then space-separated phones.
    #[arg(long)]
    lexicon: PathBuf,
    /// Frequency list: `word<TAB>count` per line.
    #[arg(long)]
    freq: PathBuf,
    /// Number of most frequent forms to keep.
    #[arg(long, default_value_t = 5032)]
    top_n: usize,
    /// Language label; defaults to the lexicon file stem.
    #[arg(long)]
    language: Option<String>,
    #[arg(long, default_value = "broad")]
    breadth: Breadth,
    /// Comma-separated decomposition stages: hangul, hanzi, nfd.
    #[arg(long, value_delimiter = ',')]
    decompose: Vec<String>,
    /// makemeahanzi dictionary (JSON lines) for hanzi decomposition.
    #[arg(long)]
    hanzi_table: Option<PathBuf>,
    #[arg(long, default_value = "one-level")]
    hanzi_depth: HanziDepth,
    /// Keep only words written entirely in this script (hiragana, katakana, han).
    #[arg(long)]
    script: Option<ScriptClass>,
    /// Corpus JSON to write; the manifest goes next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSettings {
    pub lexicon: PathBuf,
    pub freq: PathBuf,
    pub top_n: usize,
    pub language: String,
    pub breadth: Breadth,
    pub hangul: bool,
    pub hanzi: Option<String>,
    pub nfd: bool,
    pub hanzi_table: Option<PathBuf>,
    pub script: Option<String>,
    pub out: PathBuf,
}

impl IngestArgs {
    pub fn resolve(&self) -> CliResult<IngestSettings> {
        let (mut hangul, mut hanzi, mut nfd) = (false, false, false);
        for stage in &self.decompose {
            match stage.trim() {
                "hangul" => hangul = true,
                "hanzi" => hanzi = true,
                "nfd" => nfd = true,
                "" => {}
                other => {
                    return Err(CliError::Input(anyhow::anyhow!(
                        "unknown decomposition stage {other:?} (expected hangul, hanzi or nfd)"
                    )))
                }
            }
        }
        if hanzi && self.hanzi_table.is_none() {
            return Err(CliError::Input(anyhow::anyhow!("--decompose hanzi needs --hanzi-table")));
        }
        if self.top_n == 0 {
            return Err(CliError::Input(anyhow::anyhow!("--top-n must be at least 1")));
        }
        let language = self.language.clone().unwrap_or_else(|| {
            self.lexicon.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        });
        Ok(IngestSettings {
            lexicon: self.lexicon.clone(),
            freq: self.freq.clone(),
            top_n: self.top_n,
            language,
            breadth: self.breadth,
            hangul,
            hanzi: hanzi.then(|| self.hanzi_depth.to_string()),
            nfd,
            hanzi_table: self.hanzi_table.clone(),
            script: self.script.map(|s| s.to_string()),
            out: self.out.clone(),
        })
    }
}

pub fn manifest_path(out: &std::path::Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn execute(s: &IngestSettings) -> CliResult<()> {
    let mut manifest = RunManifest::new("ingest", s);
    let lex_bytes = read_input(&s.lexicon, &mut manifest.inputs)?;
    let mut lexicon = parse_pron_lexicon(&lex_bytes).input(|| format!("{}", s.lexicon.display()))?;
    let freq_bytes = read_input(&s.freq, &mut manifest.inputs)?;
    let freqs = parse_frequency_list(&freq_bytes).input(|| format!("{}", s.freq.display()))?;
    let script = s
        .script
        .as_deref()
        .map(|name| name.parse::<ScriptClass>().map_err(anyhow::Error::msg))
        .transpose()
        .input(|| "script".into())?;
    if let Some(class) = script {
        lexicon = filter_lexicon_by_script(&lexicon, class);
        if lexicon.is_empty() {
            return Err(CliError::Input(anyhow::anyhow!("no lexicon entries are written entirely in {class}")));
        }
    }
    let meta = CorpusMeta::new(s.language.clone(), s.breadth);
    let selection = select_top_n(&lexicon, &freqs, s.top_n, meta).input(|| "selecting forms".into())?;
    if let Some(w) = selection.warning() {
        eprintln!("warning: {w}");
        manifest.outcomes.push(Outcome { label: "selection".into(), ok: true, message: Some(w) });
    }
    let mut corpus = selection.corpus;
    if let Some(class) = script {
        // records the filter in the corpus pipeline; every entry already passes
        corpus = filter_by_script(&corpus, class).input(|| "script filter".into())?;
    }
    let hanzi = s
        .hanzi
        .as_deref()
        .map(|d| d.parse::<HanziDepth>().map_err(anyhow::Error::msg))
        .transpose()
        .input(|| "hanzi depth".into())?;
    let config = DecomposeConfig { hangul: s.hangul, hanzi, nfd: s.nfd };
    if !config.is_identity() {
        let table = match (&s.hanzi_table, hanzi) {
            (Some(path), Some(_)) => {
                let text = read_text(path, &mut manifest.inputs)?;
                Some(load_hanzi_table(&text).input(|| format!("{}", path.display()))?)
            }
            _ => None,
        };
        corpus = apply_decomposition_pipeline(&corpus, &config, table.as_ref()).input(|| "decomposition".into())?;
    }
    let json = corpus.to_json().input(|| "serializing corpus".into())?;
    write_file(&s.out, &(json + "\n"))?;
    manifest.outcomes.push(Outcome {
        label: "corpus".into(),
        ok: true,
        message: Some(format!("{} entries written to {}", corpus.len(), s.out.display())),
    });
    manifest.write(&manifest_path(&s.out))?;
    eprintln!("{} entries, pipeline [{}]", corpus.len(), corpus.pipeline().join(", "));
    Ok(())
}
