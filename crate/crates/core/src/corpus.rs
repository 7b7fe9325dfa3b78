//! Question-record ingestion and validation.
//!
//! The canonical input is a line-delimited file with one JSON object per
//! line: `id` (string), `title` (string), `categories` (array of strings),
//! `followers` (non-negative integer), `answers` (optional integer) and
//! `created` (ISO-8601 date). Titles are reduced to their character count
//! at load time; downstream stages never see the text itself.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on categories per record: up to 5 user-chosen plus 3 suggested.
pub const MAX_CATEGORIES: usize = 8;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no valid records in {path} ({skipped} line(s) skipped)")]
    NoValidRecords { path: String, skipped: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },
}

/// Why a line was rejected during ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LineIssue {
    /// The line is not a valid record object.
    Malformed(String),
    /// The record has no categories left after de-duplication.
    EmptyCategories,
    /// More categories than the platform allows.
    TooManyCategories(usize),
    /// A previous line already used this id.
    DuplicateId(String),
    /// The record postdates the corpus cutoff.
    AfterCutoff(NaiveDate),
}

impl std::fmt::Display for LineIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LineIssue::Malformed(msg) => write!(f, "malformed record: {msg}"),
            LineIssue::EmptyCategories => write!(f, "record has no categories"),
            LineIssue::TooManyCategories(n) => {
                write!(f, "record has {n} categories (limit {MAX_CATEGORIES})")
            }
            LineIssue::DuplicateId(id) => write!(f, "duplicate id {id:?}"),
            LineIssue::AfterCutoff(d) => write!(f, "created {d} is after the cutoff date"),
        }
    }
}

/// One question: its categories and the covariates used downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    /// Character count of the question title.
    pub title_length: u32,
    /// Category names in their stored order, free of duplicates.
    pub categories: Vec<String>,
    pub followers: u64,
    pub answers: Option<u64>,
    pub created: NaiveDate,
}

/// A validated set of records plus the cutoff date that bounds them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<QuestionRecord>,
    cutoff_date: NaiveDate,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness, the cutoff bound, and the
    /// per-record category invariants.
    pub fn new(records: Vec<QuestionRecord>, cutoff_date: NaiveDate) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for rec in &records {
            if !seen.insert(rec.id.as_str()) {
                return Err(CorpusError::InvalidRecord {
                    id: rec.id.clone(),
                    reason: "duplicate id".into(),
                });
            }
            if rec.created > cutoff_date {
                return Err(CorpusError::InvalidRecord {
                    id: rec.id.clone(),
                    reason: format!("created {} is after the cutoff date", rec.created),
                });
            }
            validate_categories(&rec.categories).map_err(|reason| CorpusError::InvalidRecord {
                id: rec.id.clone(),
                reason,
            })?;
        }
        Ok(Corpus {
            records,
            cutoff_date,
        })
    }

    pub fn records(&self) -> &[QuestionRecord] {
        &self.records
    }

    pub fn cutoff_date(&self) -> NaiveDate {
        self.cutoff_date
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record count, category-list-length histogram, and the share of
    /// records with two or more categories.
    pub fn stats(&self) -> Result<CorpusStats, CorpusError> {
        if self.records.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut histogram = BTreeMap::new();
        let mut multi = 0usize;
        for rec in &self.records {
            *histogram.entry(rec.categories.len()).or_insert(0usize) += 1;
            if rec.categories.len() >= 2 {
                multi += 1;
            }
        }
        Ok(CorpusStats {
            records: self.records.len(),
            category_count_histogram: histogram,
            multi_category_share: multi as f64 / self.records.len() as f64,
        })
    }
}

/// Summary returned by [`Corpus::stats`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub records: usize,
    /// Number of categories per record -> how many records have that many.
    pub category_count_histogram: BTreeMap<usize, usize>,
    pub multi_category_share: f64,
}

/// Outcome bookkeeping for one [`load_corpus`] call.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadSummary {
    pub lines_read: usize,
    pub loaded: usize,
    /// `(1-based line number, reason)` for every rejected line.
    pub skipped: Vec<(usize, LineIssue)>,
    /// `(1-based line number, duplicates dropped)` where a record repeated
    /// a category name.
    pub category_dedup: Vec<(usize, usize)>,
}

impl LoadSummary {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

/// Wire format of one line in the record file.
#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    title: String,
    categories: Vec<String>,
    followers: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answers: Option<u64>,
    created: NaiveDate,
}

fn validate_categories(categories: &[String]) -> Result<(), String> {
    if categories.is_empty() {
        return Err(LineIssue::EmptyCategories.to_string());
    }
    if categories.len() > MAX_CATEGORIES {
        return Err(LineIssue::TooManyCategories(categories.len()).to_string());
    }
    let mut seen = HashSet::with_capacity(categories.len());
    for c in categories {
        if !seen.insert(c.as_str()) {
            return Err(format!("duplicate category {c:?}"));
        }
    }
    Ok(())
}

/// Order-preserving de-duplication; returns how many names were dropped.
fn dedup_categories(categories: &mut Vec<String>) -> usize {
    let mut seen = HashSet::with_capacity(categories.len());
    let before = categories.len();
    categories.retain(|c| seen.insert(c.clone()));
    before - categories.len()
}

/// Reads a line-delimited record file, skipping and reporting invalid lines.
///
/// Duplicate category names inside one record are dropped with a warning;
/// records breaking any other invariant (missing fields, more than
/// [`MAX_CATEGORIES`] categories, duplicate ids, dates past the cutoff) are
/// skipped and listed in the summary by line number. Blank lines are
/// ignored. The call fails only when the file cannot be read or no valid
/// record survives.
pub fn load_corpus(
    path: impl AsRef<Path>,
    cutoff_date: NaiveDate,
) -> Result<(Corpus, LoadSummary), CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut summary = LoadSummary::default();
    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        summary.lines_read += 1;

        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(err) => {
                summary
                    .skipped
                    .push((line_no, LineIssue::Malformed(err.to_string())));
                continue;
            }
        };

        let mut categories = raw.categories;
        let dropped = dedup_categories(&mut categories);
        if dropped > 0 {
            summary.category_dedup.push((line_no, dropped));
        }

        let issue = if categories.is_empty() {
            Some(LineIssue::EmptyCategories)
        } else if categories.len() > MAX_CATEGORIES {
            Some(LineIssue::TooManyCategories(categories.len()))
        } else if raw.created > cutoff_date {
            Some(LineIssue::AfterCutoff(raw.created))
        } else if seen_ids.contains(&raw.id) {
            Some(LineIssue::DuplicateId(raw.id.clone()))
        } else {
            None
        };
        if let Some(issue) = issue {
            summary.skipped.push((line_no, issue));
            continue;
        }

        seen_ids.insert(raw.id.clone());
        records.push(QuestionRecord {
            id: raw.id,
            title_length: raw.title.chars().count() as u32,
            categories,
            followers: raw.followers,
            answers: raw.answers,
            created: raw.created,
        });
    }

    if records.is_empty() {
        return Err(CorpusError::NoValidRecords {
            path: path.display().to_string(),
            skipped: summary.skipped.len(),
        });
    }
    summary.loaded = records.len();
    let corpus = Corpus {
        records,
        cutoff_date,
    };
    Ok((corpus, summary))
}

/// Writes a corpus back out in the line-delimited input format.
///
/// Only the title's character count survives ingestion, so the emitted
/// `title` is a placeholder string of the recorded length.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    for rec in &corpus.records {
        let raw = RawRecord {
            id: rec.id.clone(),
            title: "x".repeat(rec.title_length as usize),
            categories: rec.categories.clone(),
            followers: rec.followers,
            answers: rec.answers,
            created: rec.created,
        };
        let line = serde_json::to_string(&raw).expect("record serialization cannot fail");
        writeln!(writer, "{line}").map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    writer.flush().map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}
