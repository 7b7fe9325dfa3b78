//! Category embeddings trained with skip-gram and negative sampling.
//!
//! Each question's category list is one training sentence. Training
//! maximizes, per (center `c`, context `o`, negatives `N`),
//! `log sigmoid(u_o . v_c) + sum over n in N of log sigmoid(-u_n . v_c)`
//! by stochastic gradient ascent, where `v` are input vectors and `u`
//! output vectors. The published vector of a category is its input row.

mod matrix;
mod sgns;
mod train;
mod vocab;

pub use matrix::{cosine_similarity, nearest_neighbors, EmbeddingMatrix};
pub use sgns::{pair_gradient, pair_objective, SgnsGradient, SgnsParams};
pub use train::{train_embeddings, train_embeddings_with_progress, EpochStats};
pub use vocab::{build_vocabulary, Vocabulary};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid embedding configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no category appears at least {min_count} times")]
    EmptyVocabulary { min_count: u64 },
    #[error("no record has 2 or more in-vocabulary categories")]
    NoUsableSentences,
    #[error("non-finite value during training (epoch {epoch}, ~{pairs_done} pairs done): {what}")]
    NonFinite {
        epoch: usize,
        pairs_done: u64,
        what: String,
    },
    #[error("zero-norm vector has no cosine similarity")]
    ZeroNorm,
    #[error("vector lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("category name {0:?} contains whitespace and cannot be exported")]
    WhitespaceInName(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed embedding file at line {line}: {reason}")]
    MalformedFile { line: usize, reason: String },
}

/// Whether training runs on one thread or many.
///
/// Sequential training is bit-reproducible for a fixed seed. Parallel
/// training lets workers update shared parameters with relaxed atomics;
/// results are statistically equivalent but not bit-reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum TrainMode {
    #[default]
    Sequential,
    /// `workers` threads; 0 means use all available parallelism.
    Parallel { workers: usize },
}

/// Hyperparameters for one training run. The seed is always explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingConfig {
    /// Vector dimension `k`.
    pub dimension: usize,
    pub epochs: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    /// Initial learning rate; decays linearly to 1e-4 of itself over the
    /// total number of training pairs.
    pub learning_rate: f64,
    /// Context window half-width. Category lists hold at most 8 names, so
    /// the default pairs every ordered pair within a list.
    pub window: usize,
    /// Vocabulary inclusion threshold (occurrences across all records).
    pub min_count: u64,
    pub seed: u64,
    pub mode: TrainMode,
}

impl EmbeddingConfig {
    /// Conventional defaults; only the seed has no sensible default.
    pub fn with_seed(seed: u64) -> Self {
        EmbeddingConfig {
            dimension: 50,
            epochs: 5,
            negatives: 5,
            learning_rate: 0.025,
            window: 8,
            min_count: 5,
            seed,
            mode: TrainMode::Sequential,
        }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let fail = |msg: &str| Err(EmbeddingError::InvalidConfig(msg.to_string()));
        if self.dimension < 2 {
            return fail("dimension must be at least 2");
        }
        if self.epochs < 1 {
            return fail("epochs must be at least 1");
        }
        if self.negatives < 1 {
            return fail("negatives must be at least 1");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return fail("learning rate must be positive and finite");
        }
        if self.window < 1 {
            return fail("window must be at least 1");
        }
        if self.min_count < 1 {
            return fail("min_count must be at least 1");
        }
        Ok(())
    }
}
