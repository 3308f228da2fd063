//! Text and CSV formats for corpora, treebanks and extracted sentences.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rolebench_core::paradigm::Frame;
use rolebench_core::treebank::{extract_from, parse_ptb, ParseError};
use rolebench_core::{ExtractedSentence, ParseTree, Voice};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
}

pub fn read_file(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_owned(), source })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| FormatError::Io { path: dir.to_owned(), source })?;
    }
    fs::write(path, contents).map_err(|source| FormatError::Io { path: path.to_owned(), source })
}

/// One sentence per line, tokens separated by single spaces.
pub fn corpus_to_text(corpus: &[Vec<String>]) -> String {
    let mut out = String::new();
    for s in corpus {
        out.push_str(&s.join(" "));
        out.push('\n');
    }
    out
}

pub fn corpus_from_text(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Trees of every file in order, with ids `<file stem>:<tree index>`.
pub fn read_treebanks(paths: &[PathBuf]) -> Result<Vec<(String, ParseTree)>, FormatError> {
    let mut out = Vec::new();
    for path in paths {
        let text = read_file(path)?;
        let trees = parse_ptb(&text).map_err(|source| FormatError::Parse { path: path.clone(), source })?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.extend(trees.into_iter().enumerate().map(|(i, t)| (format!("{stem}:{i}"), t)));
    }
    Ok(out)
}

/// Extract one cell, drop excluded source ids, keep the first `cap` in
/// corpus order.
pub fn extract_cell(
    trees: &[(String, ParseTree)],
    frame: Frame,
    voice: Voice,
    cap: usize,
    exclude: &BTreeSet<String>,
) -> Vec<ExtractedSentence> {
    extract_from(trees.iter().map(|(id, t)| (id.clone(), t)), frame, voice)
        .into_iter()
        .filter(|s| !exclude.contains(&s.source_id))
        .take(cap)
        .collect()
}

pub const EXTRACTED_HEADER: [&str; 7] =
    ["source_id", "frame", "voice", "verb", "tokens", "theme_head_index", "recipient_head_index"];

pub fn extracted_to_csv(rows: &[ExtractedSentence]) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(EXTRACTED_HEADER)?;
    for s in rows {
        w.write_record([
            s.source_id.clone(),
            s.frame.to_string(),
            s.voice.to_string(),
            s.verb_lemma.clone(),
            s.tokens.join(" "),
            s.theme_head_index.to_string(),
            s.recipient_head_index.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of strings is UTF-8"))
}

pub fn extracted_from_csv(text: &str) -> Result<Vec<ExtractedSentence>, FormatError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| FormatError::Row { line, message };
        if rec.len() != EXTRACTED_HEADER.len() {
            return Err(bad(format!("{} fields, expected {}", rec.len(), EXTRACTED_HEADER.len())));
        }
        let index = |i: usize| rec[i].parse::<usize>().map_err(|e| bad(format!("{}: {e}", EXTRACTED_HEADER[i])));
        let s = ExtractedSentence {
            source_id: rec[0].to_owned(),
            frame: rec[1].parse().map_err(|e| bad(format!("{e}")))?,
            voice: rec[2].parse().map_err(|e| bad(format!("{e}")))?,
            verb_lemma: rec[3].to_owned(),
            tokens: rec[4].split(' ').map(str::to_owned).collect(),
            theme_head_index: index(5)?,
            recipient_head_index: index(6)?,
        };
        if s.theme_head_index >= s.tokens.len() || s.recipient_head_index >= s.tokens.len() {
            return Err(bad("head index past the end of the sentence".into()));
        }
        out.push(s);
    }
    Ok(out)
}

/// Double-object and prepositional-dative counts for one verb, both voices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameCounts {
    pub double_object: usize,
    pub prepositional: usize,
}

impl FrameCounts {
    /// PD per DO; `None` when the verb never occurs.
    pub fn ratio(&self) -> Option<f64> {
        match (self.double_object, self.prepositional) {
            (0, 0) => None,
            (d, p) => Some(p as f64 / d as f64),
        }
    }
}

pub fn frame_counts(extracted: &[ExtractedSentence], verbs: &[String]) -> BTreeMap<String, FrameCounts> {
    let mut out: BTreeMap<String, FrameCounts> = verbs.iter().map(|v| (v.clone(), FrameCounts::default())).collect();
    for s in extracted {
        if let Some(c) = out.get_mut(&s.verb_lemma) {
            match s.frame {
                Frame::DoubleObject => c.double_object += 1,
                Frame::Prepositional => c.prepositional += 1,
            }
        }
    }
    out
}

pub fn frame_counts_table(counts: &BTreeMap<String, FrameCounts>, verbs: &[String]) -> String {
    let mut out = String::from("| verb | DO | PD | PD/DO |\n|---|---:|---:|---:|\n");
    for v in verbs {
        let c = counts.get(v).copied().unwrap_or_default();
        let ratio = match c.ratio() {
            None => "—".to_owned(),
            Some(r) if r.is_infinite() => "∞".to_owned(),
            Some(r) => format!("{r:.2}"),
        };
        out.push_str(&format!("| {v} | {} | {} | {ratio} |\n", c.double_object, c.prepositional));
    }
    out
}
