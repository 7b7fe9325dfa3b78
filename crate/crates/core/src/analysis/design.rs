//! Design-matrix assembly for the three nested appeal models.

use chrono::Weekday;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::AnalysisError;
use crate::metrics::QuestionMetrics;

/// Which of the three nested models to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    /// Spanning terms only: ks_log and its square.
    Model1,
    /// Model 1 plus hierarchy, title length, lasting days, weekday dummies.
    Model2,
    /// Model 2 plus the two spanning-by-hierarchy interactions.
    Model3,
}

impl std::str::FromStr for ModelId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" | "model1" => Ok(ModelId::Model1),
            "2" | "model2" => Ok(ModelId::Model2),
            "3" | "model3" => Ok(ModelId::Model3),
            other => Err(format!("unknown model {other:?} (expected 1, 2, or 3)")),
        }
    }
}

/// A model id plus the standardization flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelSpec {
    pub id: ModelId,
    /// Z-score every non-intercept column and the outcome before fitting.
    pub standardize: bool,
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        ModelSpec {
            id,
            standardize: false,
        }
    }

    /// Column names in design order, intercept first.
    pub fn column_names(&self) -> Vec<&'static str> {
        let mut names = vec!["intercept", "ks_log", "ks_log_sq"];
        if matches!(self.id, ModelId::Model2 | ModelId::Model3) {
            names.extend([
                "hierarchy",
                "title_length",
                "lasting_days_log",
                "monday",
                "tuesday",
                "wednesday",
                "thursday",
                "friday",
            ]);
        }
        if self.id == ModelId::Model3 {
            names.extend(["ks_log_x_hierarchy", "ks_log_sq_x_hierarchy"]);
        }
        names
    }

    fn needs_hierarchy(&self) -> bool {
        matches!(self.id, ModelId::Model2 | ModelId::Model3)
    }
}

/// Rows dropped while assembling a design, by reason. A row missing both
/// fields is counted under both reasons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExclusionCounts {
    pub missing_ks_log: usize,
    pub missing_hierarchy: usize,
    pub excluded: usize,
    pub used: usize,
}

/// A ready-to-fit design: X with a leading intercept column, the appeal
/// outcome, and bookkeeping about what went in.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<String>,
    pub kept_ids: Vec<String>,
    pub exclusions: ExclusionCounts,
}

/// Assembles X and y for the given model.
///
/// Rows missing a required field (ks_log always; hierarchy for Models 2
/// and 3) are excluded and tallied. Interaction columns are elementwise
/// products of the already-formed ks_log, ks_log squared, and hierarchy
/// columns. With `standardize`, every non-intercept column and the outcome
/// are z-scored (sample standard deviation). A constant non-intercept
/// column is an error either way.
pub fn build_design_matrix(
    metrics: &[QuestionMetrics],
    spec: &ModelSpec,
) -> Result<DesignMatrix, AnalysisError> {
    if metrics.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }

    let mut exclusions = ExclusionCounts::default();
    let mut kept: Vec<&QuestionMetrics> = Vec::with_capacity(metrics.len());
    for m in metrics {
        let mut usable = true;
        if m.ks_log.is_none() {
            exclusions.missing_ks_log += 1;
            usable = false;
        }
        if spec.needs_hierarchy() && m.hierarchy.is_none() {
            exclusions.missing_hierarchy += 1;
            usable = false;
        }
        if usable {
            kept.push(m);
        } else {
            exclusions.excluded += 1;
        }
    }
    exclusions.used = kept.len();
    if kept.is_empty() {
        return Err(AnalysisError::NoRowsSurvive {
            excluded: exclusions.excluded,
            missing_ks_log: exclusions.missing_ks_log,
            missing_hierarchy: exclusions.missing_hierarchy,
        });
    }

    let names = spec.column_names();
    let (n, p) = (kept.len(), names.len());
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (r, m) in kept.iter().enumerate() {
        let ks_log = m.ks_log.expect("filtered above");
        x[(r, 0)] = 1.0;
        x[(r, 1)] = ks_log;
        x[(r, 2)] = ks_log * ks_log;
        if spec.needs_hierarchy() {
            let h = f64::from(m.hierarchy.expect("filtered above"));
            x[(r, 3)] = h;
            x[(r, 4)] = f64::from(m.title_length);
            x[(r, 5)] = m.lasting_days_log;
            x[(r, 6)] = f64::from(m.day_of_week == Weekday::Mon);
            x[(r, 7)] = f64::from(m.day_of_week == Weekday::Tue);
            x[(r, 8)] = f64::from(m.day_of_week == Weekday::Wed);
            x[(r, 9)] = f64::from(m.day_of_week == Weekday::Thu);
            x[(r, 10)] = f64::from(m.day_of_week == Weekday::Fri);
            if spec.id == ModelId::Model3 {
                x[(r, 11)] = x[(r, 1)] * h;
                x[(r, 12)] = x[(r, 2)] * h;
            }
        }
        y[r] = m.appeal;
    }

    for (c, name) in names.iter().enumerate().skip(1) {
        let col = x.column(c);
        let (min, max) = col.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        if min == max {
            return Err(AnalysisError::ConstantColumn {
                name: name.to_string(),
            });
        }
    }

    if spec.standardize {
        for (c, name) in names.iter().enumerate().skip(1) {
            let col: Vec<f64> = x.column(c).iter().copied().collect();
            let scaled = standardize_values(&col).ok_or_else(|| AnalysisError::ConstantColumn {
                name: name.to_string(),
            })?;
            x.set_column(c, &DVector::from_vec(scaled));
        }
        let scaled = standardize_values(y.as_slice()).ok_or(AnalysisError::ConstantOutcome)?;
        y = DVector::from_vec(scaled);
    }

    Ok(DesignMatrix {
        x,
        y,
        column_names: names.into_iter().map(String::from).collect(),
        kept_ids: kept.iter().map(|m| m.id.clone()).collect(),
        exclusions,
    })
}

/// Z-scores one column with the sample (n - 1) standard deviation;
/// `None` when the column has no variance.
fn standardize_values(values: &[f64]) -> Option<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return None;
    }
    let sd = var.sqrt();
    Some(values.iter().map(|v| (v - mean) / sd).collect())
}
