//! Corpus loading, gold/mention file IO, corpus statistics and the
//! candidate-vs-selected frequency report.
//!
//! A corpus is a directory of UTF-8 `.txt` files, one document per file,
//! ids being the relative paths. Gold annotations and extraction dumps are
//! JSON-lines in the shapes of [`GoldAnnotation`] and [`Mention`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::candidates::CandidateEntity;
use crate::eval::{EntityType, GoldAnnotation, Mention};
use crate::selection::NamedEntity;
use crate::text::{segment, Document};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("gold annotations reference unknown documents: {docs:?}")]
    DanglingGoldDocuments { docs: Vec<String> },
}

/// One unreadable corpus file; loading continues past these.
#[derive(Debug)]
pub struct FileFailure {
    pub path: PathBuf,
    pub message: String,
}

/// A loaded corpus: segmented documents in id order plus per-file failures.
#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub documents: Vec<Document>,
    pub failures: Vec<FileFailure>,
}

/// Load and segment every `.txt` file under `dir` (recursively). Document
/// ids are relative paths. Unreadable or non-UTF-8 files are reported in
/// `failures` while the rest proceed.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<CorpusLoad, CorpusError> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    collect_txt_files(dir, dir, &mut files).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    files.sort_by(|a, b| a.1.cmp(&b.1));

    let mut load = CorpusLoad::default();
    for (path, id) in files {
        match std::fs::read_to_string(&path) {
            Ok(text) => load.documents.push(segment(id, text)),
            Err(e) => load.failures.push(FileFailure {
                path,
                message: e.to_string(),
            }),
        }
    }
    Ok(load)
}

fn collect_txt_files(
    root: &Path,
    dir: &Path,
    out: &mut Vec<(PathBuf, String)>,
) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_txt_files(root, &path, out)?;
        } else if path.extension().is_some_and(|ext| ext == "txt") {
            let id = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .to_string_lossy()
                .into_owned();
            out.push((path, id));
        }
    }
    Ok(())
}

/// Parse a JSON-lines gold annotation file.
pub fn load_gold(path: impl AsRef<Path>) -> Result<Vec<GoldAnnotation>, CorpusError> {
    parse_jsonl(path.as_ref())
}

/// Parse a JSON-lines extraction dump (`{doc, surface, start?, end?}`).
pub fn load_mentions(path: impl AsRef<Path>) -> Result<Vec<Mention>, CorpusError> {
    parse_jsonl(path.as_ref())
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let display = path.display().to_string();
    let content = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            path: display.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Corpus shape summary: document count, words per document, gold counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub words_min: usize,
    pub words_max: usize,
    pub words_mean: f64,
    pub entities_total: usize,
    pub entities_by_type: BTreeMap<EntityType, usize>,
}

/// Word counts are word-kind tokens only; numbers and punctuation do not
/// count. Gold ids must all resolve to corpus documents.
pub fn corpus_stats(
    docs: &[Document],
    gold: &[GoldAnnotation],
) -> Result<CorpusStats, CorpusError> {
    let ids: std::collections::HashSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let mut dangling: Vec<String> = gold
        .iter()
        .filter(|g| !ids.contains(g.doc.as_str()))
        .map(|g| g.doc.clone())
        .collect();
    if !dangling.is_empty() {
        dangling.sort();
        dangling.dedup();
        return Err(CorpusError::DanglingGoldDocuments { docs: dangling });
    }

    let counts: Vec<usize> = docs.iter().map(Document::word_count).collect();
    let mut by_type = BTreeMap::new();
    for g in gold {
        *by_type.entry(g.entity_type).or_insert(0usize) += 1;
    }
    Ok(CorpusStats {
        documents: docs.len(),
        words_min: counts.iter().copied().min().unwrap_or(0),
        words_max: counts.iter().copied().max().unwrap_or(0),
        words_mean: if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<usize>() as f64 / counts.len() as f64
        },
        entities_total: gold.len(),
        entities_by_type: by_type,
    })
}

/// One surface in the frequency report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreqRow {
    pub surface: String,
    pub candidate_count: usize,
    pub selected_count: usize,
    pub kept: bool,
}

/// Surfaces with their Phase-1 and Phase-2 occurrence counts, sorted by
/// candidate count descending, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyReport {
    pub min_count: usize,
    pub rows: Vec<FreqRow>,
}

impl FrequencyReport {
    /// CSV with a header row, UTF-8, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("surface,candidate_count,selected_count,kept\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&row.surface),
                row.candidate_count,
                row.selected_count,
                row.kept
            ));
        }
        out
    }
}

/// Quote a CSV field when it contains separators, quotes or newlines.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Tally candidate surfaces (exact, case-sensitive) against the selection
/// survivors of the same run. Survivors count under the surface of the
/// candidate they came from, so clipping cannot push a selected count above
/// its candidate count.
pub fn frequency_report(
    candidates: &[CandidateEntity],
    entities: &[NamedEntity],
    min_count: usize,
) -> FrequencyReport {
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for c in candidates {
        tally.entry(c.surface.as_str()).or_default().0 += 1;
    }
    for e in entities {
        tally
            .entry(e.provenance.original_surface.as_str())
            .or_default()
            .1 += 1;
    }
    let mut rows: Vec<FreqRow> = tally
        .into_iter()
        .filter(|(_, (cand, _))| *cand >= min_count)
        .map(|(surface, (candidate_count, selected_count))| FreqRow {
            surface: surface.to_string(),
            candidate_count,
            selected_count,
            kept: selected_count > 0,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.candidate_count
            .cmp(&a.candidate_count)
            .then_with(|| a.surface.cmp(&b.surface))
    });
    FrequencyReport { min_count, rows }
}
