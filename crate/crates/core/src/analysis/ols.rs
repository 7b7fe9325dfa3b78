//! Ordinary least squares with classical standard errors.
//!
//! The fit goes through a column-pivoted QR decomposition of the design;
//! the normal-equations route exists only as a test oracle.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::design::{build_design_matrix, ExclusionCounts, ModelSpec};
use super::AnalysisError;
use crate::metrics::QuestionMetrics;

/// One fitted coefficient with its inference columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
}

/// A fitted linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Rows that entered the fit.
    pub n: usize,
    /// Residual degrees of freedom, `n - p`.
    pub df_residual: usize,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Two-sided confidence interval at `level` (e.g. 0.95) from the
    /// t distribution with the fit's residual degrees of freedom.
    pub fn confidence_interval(&self, name: &str, level: f64) -> Option<(f64, f64)> {
        let c = self.coefficient(name)?;
        let dist = StudentsT::new(0.0, 1.0, self.df_residual as f64).ok()?;
        let quantile = dist.inverse_cdf(0.5 + level / 2.0);
        Some((
            c.estimate - quantile * c.std_error,
            c.estimate + quantile * c.std_error,
        ))
    }
}

/// Names the most plausible collinear pair for a rank-deficiency report:
/// two constant columns if present, otherwise the pair with the highest
/// absolute correlation.
fn most_collinear_pair(x: &DMatrix<f64>, names: &[String]) -> (String, String) {
    let p = x.ncols();
    let n = x.nrows() as f64;
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for c in 0..p {
        let col = x.column(c);
        means[c] = col.iter().sum::<f64>() / n;
        sds[c] = (col.iter().map(|v| (v - means[c]).powi(2)).sum::<f64>() / n).sqrt();
    }

    let constants: Vec<usize> = (0..p).filter(|&c| sds[c] == 0.0).collect();
    if constants.len() >= 2 {
        return (names[constants[0]].clone(), names[constants[1]].clone());
    }

    let mut best = (0, 1.min(p - 1), -1.0);
    for i in 0..p {
        for j in (i + 1)..p {
            if sds[i] == 0.0 || sds[j] == 0.0 {
                continue;
            }
            let mut cov = 0.0;
            for r in 0..x.nrows() {
                cov += (x[(r, i)] - means[i]) * (x[(r, j)] - means[j]);
            }
            let corr = (cov / n / (sds[i] * sds[j])).abs();
            if corr > best.2 {
                best = (i, j, corr);
            }
        }
    }
    (names[best.0].clone(), names[best.1].clone())
}

/// Least-squares fit of `y` on the columns of `x`.
///
/// Standard errors come from `sigma^2 (X'X)^-1` with
/// `sigma^2 = RSS / (n - p)`; p-values are two-sided from the
/// t distribution with `n - p` degrees of freedom.
pub fn fit_ols(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<RegressionResult, AnalysisError> {
    let (n, p) = (x.nrows(), x.ncols());
    assert_eq!(names.len(), p, "one name per design column");
    assert_eq!(y.len(), n, "outcome length must match design rows");
    if n < p + 1 {
        return Err(AnalysisError::Underdetermined { rows: n, cols: p });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteInput("design matrix"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteInput("outcome"));
    }

    let qr = x.clone().col_piv_qr();
    let r = qr.r();
    let tolerance = f64::EPSILON * r[(0, 0)].abs() * n.max(p) as f64;
    let deficient = (0..p).any(|k| r[(k, k)].abs() <= tolerance);
    if deficient {
        let (a, b) = most_collinear_pair(x, names);
        return Err(AnalysisError::RankDeficient { a, b });
    }

    // X P = Q R, so beta = P R^-1 Q' y.
    let qty = qr.q().transpose() * y;
    let mut beta = r
        .solve_upper_triangular(&qty)
        .expect("full-rank R is invertible");
    qr.p().inv_permute_rows(&mut beta);

    let residuals = y - x * &beta;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    if tss == 0.0 {
        return Err(AnalysisError::ConstantOutcome);
    }

    let df = n - p;
    let sigma2 = rss / df as f64;
    // (X'X)^-1 = P (R'R)^-1 P' = P R^-1 R^-' P'.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("full-rank R is invertible");
    let mut xtx_inv = &r_inv * r_inv.transpose();
    qr.p().inv_permute_rows(&mut xtx_inv);
    qr.p().inv_permute_columns(&mut xtx_inv);

    let dist = StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1 by the underdetermined check");
    let coefficients = (0..p)
        .map(|j| {
            let estimate = beta[j];
            let std_error = (sigma2 * xtx_inv[(j, j)]).sqrt();
            let t = estimate / std_error;
            let p_value = 2.0 * dist.cdf(-t.abs());
            Coefficient {
                name: names[j].clone(),
                estimate,
                std_error,
                t,
                p: p_value,
            }
        })
        .collect();

    let r_squared = 1.0 - rss / tss;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / df as f64;
    Ok(RegressionResult {
        coefficients,
        r_squared,
        adj_r_squared,
        n,
        df_residual: df,
    })
}

/// The model echo and fitted numbers for one regression, ready for
/// structured output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub model: ModelSpec,
    pub columns: Vec<String>,
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n_used: usize,
    pub exclusions: ExclusionCounts,
    /// Turning point of the spanning parabola, `-b1 / (2 b2)`, reported
    /// instead of a threshold that would depend on the log base.
    pub spanning_vertex: Option<f64>,
}

/// Builds the design for `spec`, fits it, and packages the report.
pub fn fit_model(
    metrics: &[QuestionMetrics],
    spec: &ModelSpec,
) -> Result<FitReport, AnalysisError> {
    let design = build_design_matrix(metrics, spec)?;
    let result = fit_ols(&design.x, &design.y, &design.column_names)?;
    let vertex = match (
        result.coefficient("ks_log"),
        result.coefficient("ks_log_sq"),
    ) {
        (Some(b1), Some(b2)) if b2.estimate != 0.0 => {
            Some(-b1.estimate / (2.0 * b2.estimate))
        }
        _ => None,
    };
    Ok(FitReport {
        model: *spec,
        columns: design.column_names,
        coefficients: result.coefficients,
        r_squared: result.r_squared,
        adjusted_r_squared: result.adj_r_squared,
        n_used: result.n,
        exclusions: design.exclusions,
        spanning_vertex: vertex,
    })
}
