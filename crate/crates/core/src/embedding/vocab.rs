//! Category vocabulary with an occurrence threshold.

use std::collections::HashMap;

use super::EmbeddingError;
use crate::corpus::Corpus;

/// Categories admitted to training, indexed contiguously from 0.
///
/// Order is by descending frequency, ties broken by name, so a given
/// corpus always yields the same index assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
    frequencies: Vec<u64>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary directly from `(name, frequency)` pairs.
    /// Callers must pass distinct names and frequencies `>= min_count`.
    pub(crate) fn from_counts(mut counts: Vec<(String, u64)>, min_count: u64) -> Self {
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut names = Vec::with_capacity(counts.len());
        let mut frequencies = Vec::with_capacity(counts.len());
        let mut index = HashMap::with_capacity(counts.len());
        for (name, freq) in counts {
            debug_assert!(freq >= min_count);
            index.insert(name.clone(), names.len());
            names.push(name);
            frequencies.push(freq);
        }
        Vocabulary {
            names,
            index,
            frequencies,
            min_count,
        }
    }

    /// Vocabulary in a caller-fixed order with unknown frequencies, for
    /// matrices loaded from disk. Returns the offending name on duplicates.
    pub(crate) fn from_ordered_names(names: Vec<String>) -> Result<Self, String> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(name.clone());
            }
        }
        let frequencies = vec![0; names.len()];
        Ok(Vocabulary {
            names,
            index,
            frequencies,
            min_count: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequencies[index]
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.frequencies
    }

    /// `(index, name, frequency)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, u64)> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.as_str(), self.frequencies[i]))
    }
}

/// Counts category occurrences across all records and keeps those seen at
/// least `min_count` times.
pub fn build_vocabulary(corpus: &Corpus, min_count: u64) -> Result<Vocabulary, EmbeddingError> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    if min_count < 1 {
        return Err(EmbeddingError::InvalidConfig(
            "min_count must be at least 1".into(),
        ));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for rec in corpus.records() {
        for c in &rec.categories {
            *counts.entry(c.as_str()).or_insert(0) += 1;
        }
    }
    let kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, f)| f >= min_count)
        .map(|(n, f)| (n.to_string(), f))
        .collect();
    if kept.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary { min_count });
    }
    Ok(Vocabulary::from_counts(kept, min_count))
}
