//! Per-question measures: knowledge spanning, hierarchy, appeal, and the
//! regression control variables.
//!
//! Knowledge spanning is the mean cosine distance over all unordered pairs
//! of a question's in-vocabulary categories, 0 when fewer than two remain.
//! Appeal is `log(followers + 1)` in a configurable base (default 10);
//! spanning and lasting-days use natural logs. Those bases travel with the
//! data in a metadata sidecar.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::{Datelike, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::embedding::{cosine_similarity, EmbeddingError, EmbeddingMatrix};
use crate::knowledge_tree::KnowledgeTree;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("question has an empty category list")]
    EmptyCategoryList,
    #[error("embedding failure: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("record {id}: created {created} is after the corpus cutoff {cutoff}")]
    CutoffBeforeCreated {
        id: String,
        created: chrono::NaiveDate,
        cutoff: chrono::NaiveDate,
    },
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("metrics table row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// One question's measures. `ks_log` is absent when `ks = 0`; `hierarchy`
/// is absent when no category resolves to a tree level.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionMetrics {
    pub id: String,
    /// Mean pairwise cosine distance over used categories, in [0, 2].
    pub ks: f64,
    /// `ln(ks)` when `ks > 0`.
    pub ks_log: Option<f64>,
    /// Largest tree level among the question's categories.
    pub hierarchy: Option<u32>,
    /// `log(followers + 1)` in the configured base.
    pub appeal: f64,
    pub title_length: u32,
    /// `ln(1 + days from created to the corpus cutoff)`.
    pub lasting_days_log: f64,
    pub day_of_week: Weekday,
    /// In-vocabulary categories that entered the spanning computation.
    pub n_categories_used: u32,
}

/// Knobs that change the numbers, recorded in the output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsConfig {
    /// Base of the appeal logarithm.
    pub appeal_log_base: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            appeal_log_base: 10.0,
        }
    }
}

/// Sidecar for a metrics table: log bases and exclusion tallies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsMetadata {
    pub appeal_log_base: f64,
    /// Base of `ks_log` ("natural").
    pub spanning_log: String,
    /// Base of `lasting_days_log` ("natural").
    pub lasting_days_log: String,
    pub records: usize,
    /// Records with `ks = 0`, hence no `ks_log`.
    pub missing_ks_log: usize,
    /// Records whose categories all lack a tree level.
    pub missing_hierarchy: usize,
    /// Category mentions dropped for being out of vocabulary.
    pub out_of_vocabulary_mentions: usize,
    /// Category mentions ignored by the hierarchy lookup.
    pub hierarchy_ignored_mentions: usize,
}

/// Mean cosine distance over all unordered pairs of the in-vocabulary
/// categories; returns `(ks, n_used)`.
///
/// Names are de-duplicated and resolved to vocabulary indices first and
/// pairs are visited in sorted index order, so the result is exactly
/// invariant under permutation or repetition of the input list.
pub fn knowledge_spanning(
    matrix: &EmbeddingMatrix,
    categories: &[impl AsRef<str>],
) -> Result<(f64, u32), MetricsError> {
    if categories.is_empty() {
        return Err(MetricsError::EmptyCategoryList);
    }
    let used: BTreeSet<usize> = categories
        .iter()
        .filter_map(|c| matrix.vocabulary().get(c.as_ref()))
        .collect();
    let n = used.len();
    if n <= 1 {
        return Ok((0.0, n as u32));
    }
    let indices: Vec<usize> = used.into_iter().collect();
    let mut total = 0.0;
    for i in 0..indices.len() {
        for j in (i + 1)..indices.len() {
            let sim = cosine_similarity(matrix.vector_at(indices[i]), matrix.vector_at(indices[j]))?;
            total += 1.0 - sim;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((total / pairs, n as u32))
}

fn log_in_base(x: f64, base: f64) -> f64 {
    if base == 10.0 {
        x.log10()
    } else if (base - std::f64::consts::E).abs() < 1e-12 {
        x.ln()
    } else {
        x.log(base)
    }
}

/// Computes one [`QuestionMetrics`] row per corpus record, sorted by id,
/// plus the metadata sidecar describing bases and exclusions.
pub fn compute_metrics(
    corpus: &Corpus,
    matrix: &EmbeddingMatrix,
    tree: &KnowledgeTree,
    config: &MetricsConfig,
) -> Result<(Vec<QuestionMetrics>, MetricsMetadata), MetricsError> {
    let cutoff = corpus.cutoff_date();
    let mut rows = Vec::with_capacity(corpus.len());
    let mut meta = MetricsMetadata {
        appeal_log_base: config.appeal_log_base,
        spanning_log: "natural".into(),
        lasting_days_log: "natural".into(),
        records: corpus.len(),
        missing_ks_log: 0,
        missing_hierarchy: 0,
        out_of_vocabulary_mentions: 0,
        hierarchy_ignored_mentions: 0,
    };

    for rec in corpus.records() {
        if rec.created > cutoff {
            return Err(MetricsError::CutoffBeforeCreated {
                id: rec.id.clone(),
                created: rec.created,
                cutoff,
            });
        }
        let (ks, n_used) = knowledge_spanning(matrix, &rec.categories)?;
        meta.out_of_vocabulary_mentions += rec.categories.len() - n_used as usize;
        let ks_log = (ks > 0.0).then(|| ks.ln());
        if ks_log.is_none() {
            meta.missing_ks_log += 1;
        }

        let hierarchy = tree
            .question_hierarchy(&rec.categories)
            .expect("corpus records have non-empty category lists");
        meta.hierarchy_ignored_mentions += hierarchy.ignored;
        if hierarchy.level.is_none() {
            meta.missing_hierarchy += 1;
        }

        let days = (cutoff - rec.created).num_days();
        rows.push(QuestionMetrics {
            id: rec.id.clone(),
            ks,
            ks_log,
            hierarchy: hierarchy.level,
            appeal: log_in_base((rec.followers + 1) as f64, config.appeal_log_base),
            title_length: rec.title_length,
            lasting_days_log: (days as f64).ln_1p(),
            day_of_week: rec.created.weekday(),
            n_categories_used: n_used,
        });
    }

    rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((rows, meta))
}

pub(crate) fn weekday_name(day: Weekday) -> &'static str {
    match day {
        Weekday::Mon => "Mon",
        Weekday::Tue => "Tue",
        Weekday::Wed => "Wed",
        Weekday::Thu => "Thu",
        Weekday::Fri => "Fri",
        Weekday::Sat => "Sat",
        Weekday::Sun => "Sun",
    }
}

fn weekday_from_name(name: &str) -> Option<Weekday> {
    Some(match name {
        "Mon" => Weekday::Mon,
        "Tue" => Weekday::Tue,
        "Wed" => Weekday::Wed,
        "Thu" => Weekday::Thu,
        "Fri" => Weekday::Fri,
        "Sat" => Weekday::Sat,
        "Sun" => Weekday::Sun,
        _ => return None,
    })
}

pub const METRICS_HEADER: [&str; 9] = [
    "id",
    "ks",
    "ks_log",
    "hierarchy",
    "appeal",
    "title_length",
    "lasting_days_log",
    "day_of_week",
    "n_categories_used",
];

/// Writes the metrics table as CSV; absent values are empty fields.
pub fn write_metrics_csv(
    rows: &[QuestionMetrics],
    writer: impl Write,
) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.id.as_str(),
            &r.ks.to_string(),
            &r.ks_log.map(|v| v.to_string()).unwrap_or_default(),
            &r.hierarchy.map(|v| v.to_string()).unwrap_or_default(),
            &r.appeal.to_string(),
            &r.title_length.to_string(),
            &r.lasting_days_log.to_string(),
            weekday_name(r.day_of_week),
            &r.n_categories_used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a metrics table written by [`write_metrics_csv`].
pub fn read_metrics_csv(reader: impl Read) -> Result<Vec<QuestionMetrics>, MetricsError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = r.headers()?;
        if headers.iter().ne(METRICS_HEADER) {
            return Err(MetricsError::MalformedRow {
                row: 1,
                reason: format!("unexpected header {headers:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let bad = |reason: String| MetricsError::MalformedRow { row, reason };
        if record.len() != METRICS_HEADER.len() {
            return Err(bad(format!("expected 9 fields, got {}", record.len())));
        }
        let req = |idx: usize, what: &str| -> Result<f64, MetricsError> {
            record[idx]
                .parse()
                .map_err(|_| bad(format!("bad {what} {:?}", &record[idx])))
        };
        rows.push(QuestionMetrics {
            id: record[0].to_string(),
            ks: req(1, "ks")?,
            ks_log: if record[2].is_empty() {
                None
            } else {
                Some(req(2, "ks_log")?)
            },
            hierarchy: if record[3].is_empty() {
                None
            } else {
                Some(
                    record[3]
                        .parse()
                        .map_err(|_| bad(format!("bad hierarchy {:?}", &record[3])))?,
                )
            },
            appeal: req(4, "appeal")?,
            title_length: record[5]
                .parse()
                .map_err(|_| bad(format!("bad title_length {:?}", &record[5])))?,
            lasting_days_log: req(6, "lasting_days_log")?,
            day_of_week: weekday_from_name(&record[7])
                .ok_or_else(|| bad(format!("bad day_of_week {:?}", &record[7])))?,
            n_categories_used: record[8]
                .parse()
                .map_err(|_| bad(format!("bad n_categories_used {:?}", &record[8])))?,
        });
    }
    Ok(rows)
}
