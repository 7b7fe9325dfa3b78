//! Binned means of an outcome against a predictor, with bootstrap
//! percentile bands, and their stratification by hierarchy level.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::AnalysisError;
use crate::metrics::QuestionMetrics;

/// Parameters of one curve; the seed is always explicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CurveParams {
    pub n_bins: usize,
    pub n_resamples: usize,
    /// Bins with fewer observations than this are dropped.
    pub min_bin_count: usize,
    pub seed: u64,
}

impl CurveParams {
    pub fn with_seed(seed: u64) -> Self {
        CurveParams {
            n_bins: 30,
            n_resamples: 1000,
            min_bin_count: 30,
            seed,
        }
    }
}

/// One kept bin: center of its x interval, mean of y, and the 2.5/97.5
/// percentile interval of the bin mean over resamples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinStat {
    pub center: f64,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub count: usize,
}

/// A fitted curve; bins are sorted by center ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapCurve {
    pub bins: Vec<BinStat>,
    pub n_resamples: usize,
    pub seed: u64,
    /// Bins dropped for holding fewer than `min_bin_count` observations
    /// (empty bins included).
    pub dropped_bins: usize,
}

/// Stream key for one (bin, resample) cell, independent of scheduling.
fn resample_seed(seed: u64, bin: u64, resample: u64) -> u64 {
    let mut z = seed
        ^ bin.wrapping_mul(0x9e3779b97f4a7c15)
        ^ resample.wrapping_mul(0xd1b54a32d192ed03);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Linear-interpolation percentile of an ascending slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

/// Bins `x` into `n_bins` equal-width intervals and summarizes `y` per
/// bin: its mean plus a 95% bootstrap percentile interval of that mean
/// (resampling within the bin, with replacement). Each resample's random
/// stream is derived from (seed, bin, resample), so the output does not
/// depend on evaluation order.
pub fn bootstrap_curve(
    x: &[f64],
    y: &[f64],
    params: &CurveParams,
) -> Result<BootstrapCurve, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::InvalidParams(format!(
            "x has {} values but y has {}",
            x.len(),
            y.len()
        )));
    }
    if params.n_bins < 1 {
        return Err(AnalysisError::InvalidParams("n_bins must be at least 1".into()));
    }
    if params.n_resamples < 100 {
        return Err(AnalysisError::InvalidParams(
            "n_resamples must be at least 100".into(),
        ));
    }
    if params.min_bin_count < 1 {
        return Err(AnalysisError::InvalidParams(
            "min_bin_count must be at least 1".into(),
        ));
    }
    if x.len() < params.n_bins {
        return Err(AnalysisError::TooFewPoints {
            needed: params.n_bins,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteInput("x"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteInput("y"));
    }

    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / params.n_bins as f64;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); params.n_bins];
    for (i, &xi) in x.iter().enumerate() {
        let b = if width == 0.0 {
            0
        } else {
            (((xi - lo) / width) as usize).min(params.n_bins - 1)
        };
        members[b].push(i);
    }

    let mut bins = Vec::new();
    let mut dropped = 0usize;
    for (b, indices) in members.iter().enumerate() {
        let count = indices.len();
        if count < params.min_bin_count {
            dropped += 1;
            continue;
        }
        let mean = indices.iter().map(|&i| y[i]).sum::<f64>() / count as f64;

        let mut means = Vec::with_capacity(params.n_resamples);
        for r in 0..params.n_resamples {
            let mut rng =
                ChaCha8Rng::seed_from_u64(resample_seed(params.seed, b as u64, r as u64));
            let mut total = 0.0;
            for _ in 0..count {
                total += y[indices[rng.gen_range(0..count)]];
            }
            means.push(total / count as f64);
        }
        means.sort_by(f64::total_cmp);
        let lo95 = percentile(&means, 0.025).min(mean);
        let hi95 = percentile(&means, 0.975).max(mean);

        bins.push(BinStat {
            center: if width == 0.0 { lo } else { lo + (b as f64 + 0.5) * width },
            mean,
            lo95,
            hi95,
            count,
        });
    }

    if bins.is_empty() {
        return Err(AnalysisError::AllBinsTooSmall {
            min_bin_count: params.min_bin_count,
        });
    }
    Ok(BootstrapCurve {
        bins,
        n_resamples: params.n_resamples,
        seed: params.seed,
        dropped_bins: dropped,
    })
}

/// A curve fitted to the rows at one exact hierarchy level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumCurve {
    pub level: u32,
    pub observations: usize,
    pub curve: BootstrapCurve,
}

/// A level that had too little data for a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StratumSkip {
    pub level: u32,
    pub observations: usize,
}

/// Per-level curves plus the levels skipped for lack of data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModerationCurves {
    pub curves: Vec<StratumCurve>,
    pub skipped: Vec<StratumSkip>,
}

/// Fits one appeal-versus-ks_log curve per requested hierarchy level.
///
/// A level needs at least `min_bin_count * n_bins` usable rows (exact
/// hierarchy match, ks_log present); smaller strata are reported as
/// skipped. Every stratum uses the same seed, so a single-level request
/// equals [`bootstrap_curve`] on the filtered subset.
pub fn moderation_curves(
    metrics: &[QuestionMetrics],
    levels: &[u32],
    params: &CurveParams,
) -> Result<ModerationCurves, AnalysisError> {
    let needed = params.min_bin_count * params.n_bins;
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for &level in levels {
        if !seen.insert(level) {
            continue;
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for m in metrics {
            if m.hierarchy == Some(level) {
                if let Some(ks_log) = m.ks_log {
                    x.push(ks_log);
                    y.push(m.appeal);
                }
            }
        }
        if x.len() < needed {
            skipped.push(StratumSkip {
                level,
                observations: x.len(),
            });
            continue;
        }
        curves.push(StratumCurve {
            level,
            observations: x.len(),
            curve: bootstrap_curve(&x, &y, params)?,
        });
    }
    if curves.is_empty() {
        return Err(AnalysisError::NoStratumSufficient { needed });
    }
    Ok(ModerationCurves { curves, skipped })
}

/// Writes a curve as `bin_center,mean,lo95,hi95,count` CSV.
pub fn write_curve_csv(curve: &BootstrapCurve, writer: impl Write) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_center", "mean", "lo95", "hi95", "count"])?;
    for bin in &curve.bins {
        w.write_record([
            bin.center.to_string(),
            bin.mean.to_string(),
            bin.lo95.to_string(),
            bin.hi95.to_string(),
            bin.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
