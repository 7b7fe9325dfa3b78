//! Regression models, bootstrap curves, and the 2D projection.
//!
//! Three nested linear models relate appeal to knowledge spanning: the
//! spanning terms alone, plus controls, plus spanning-by-hierarchy
//! interactions. Curves summarize appeal against a binned predictor with
//! bootstrap percentile bands; the projection reduces the embedding to two
//! principal components for plotting.

mod bootstrap;
mod design;
mod ols;
mod pca;

pub use bootstrap::{
    bootstrap_curve, moderation_curves, write_curve_csv, BinStat, BootstrapCurve, CurveParams,
    ModerationCurves, StratumCurve, StratumSkip,
};
pub use design::{build_design_matrix, DesignMatrix, ExclusionCounts, ModelId, ModelSpec};
pub use ols::{fit_model, fit_ols, Coefficient, FitReport, RegressionResult};
pub use pca::{project_2d, write_projection_csv, Projection2D};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no input rows")]
    EmptyInput,
    #[error("no rows survive exclusion ({excluded} excluded: {missing_ks_log} without ks_log, {missing_hierarchy} without hierarchy)")]
    NoRowsSurvive {
        excluded: usize,
        missing_ks_log: usize,
        missing_hierarchy: usize,
    },
    #[error("column {name} is constant; the design is degenerate")]
    ConstantColumn { name: String },
    #[error("outcome is constant; the fit is degenerate")]
    ConstantOutcome,
    #[error("design is rank-deficient: {a} and {b} are collinear")]
    RankDeficient { a: String, b: String },
    #[error("underdetermined system: {rows} rows for {cols} columns (need at least cols + 1)")]
    Underdetermined { rows: usize, cols: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("every bin has fewer than {min_bin_count} observations")]
    AllBinsTooSmall { min_bin_count: usize },
    #[error("no requested stratum reaches {needed} observations")]
    NoStratumSufficient { needed: usize },
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}
