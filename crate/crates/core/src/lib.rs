//! Measurement pipeline for knowledge spanning on Q&A corpora.
//!
//! The crate turns a corpus of questions tagged with categories into
//! quantitative measures of how far each question reaches across the
//! category space, and fits regression models of question appeal on
//! those measures:
//!
//! 1. [`corpus`]: ingest and validate question records.
//! 2. [`embedding`]: train category vectors from co-occurrence
//!    (skip-gram with negative sampling) and answer similarity queries.
//! 3. [`knowledge_tree`]: the rooted category DAG and per-category
//!    hierarchical levels.
//! 4. [`metrics`]: per-question spanning distance, hierarchy, appeal,
//!    and regression controls.
//! 5. [`analysis`]: OLS models, bootstrap curves, and 2D projection.
//! 6. [`synth`]: synthetic corpora with planted ground truth so the
//!    whole pipeline is testable end to end.

pub mod analysis;
pub mod corpus;
pub mod embedding;
pub mod knowledge_tree;
pub mod metrics;
pub mod synth;

pub use analysis::{
    bootstrap_curve, build_design_matrix, fit_model, fit_ols, moderation_curves, project_2d,
    write_curve_csv, write_projection_csv, AnalysisError, BinStat, BootstrapCurve, Coefficient,
    CurveParams, DesignMatrix, ExclusionCounts, FitReport, ModelId, ModelSpec, ModerationCurves,
    Projection2D, RegressionResult, StratumCurve, StratumSkip,
};
pub use corpus::{
    load_corpus, write_corpus, Corpus, CorpusError, CorpusStats, LineIssue, LoadSummary,
    QuestionRecord,
};
pub use embedding::{
    build_vocabulary, cosine_similarity, nearest_neighbors, pair_gradient, pair_objective,
    train_embeddings, train_embeddings_with_progress, EmbeddingConfig, EmbeddingError,
    EmbeddingMatrix, EpochStats, SgnsGradient, SgnsParams, TrainMode, Vocabulary,
};
pub use knowledge_tree::{
    load_tree, Hierarchy, KnowledgeTree, LevelRule, TreeError, TreeSummary,
};
pub use metrics::{
    compute_metrics, knowledge_spanning, read_metrics_csv, write_metrics_csv, MetricsConfig,
    MetricsError, MetricsMetadata, QuestionMetrics,
};
pub use synth::{
    generate_corpus, generate_tree, read_truth_csv, tree_edges, write_truth_csv, SynthConfig,
    SynthError, TruthRecord,
};
