//! Pair-level objective and exact gradient for skip-gram with negative
//! sampling, on plain dense storage.
//!
//! The training loop in [`super::train`] replays exactly this math on its
//! shared parameter store; keeping the formulas here as pure functions is
//! what lets tests compare both against finite differences.

/// Dense parameter block: `n` input rows and `n` output rows of width
/// `dimension`, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsParams {
    pub dimension: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl SgnsParams {
    pub fn zeros(vocab_size: usize, dimension: usize) -> Self {
        SgnsParams {
            dimension,
            input: vec![0.0; vocab_size * dimension],
            output: vec![0.0; vocab_size * dimension],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.input.len() / self.dimension
    }

    pub fn input_row(&self, word: usize) -> &[f64] {
        &self.input[word * self.dimension..(word + 1) * self.dimension]
    }

    pub fn output_row(&self, word: usize) -> &[f64] {
        &self.output[word * self.dimension..(word + 1) * self.dimension]
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(sigmoid(x))` without overflow for large negative `x`.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-likelihood of one training pair:
/// `log sigmoid(u_o . v_c) + sum over n of log sigmoid(-u_n . v_c)`.
/// Training ascends this objective.
pub fn pair_objective(
    params: &SgnsParams,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> f64 {
    let v = params.input_row(center);
    let mut total = log_sigmoid(dot(params.output_row(context), v));
    for &n in negatives {
        total += log_sigmoid(-dot(params.output_row(n), v));
    }
    total
}

/// Gradient of [`pair_objective`]. Rows absent here have zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: usize,
    /// d objective / d input[center].
    pub d_input_center: Vec<f64>,
    /// d objective / d output[word], one entry per distinct target word.
    pub d_output: Vec<(usize, Vec<f64>)>,
}

impl SgnsGradient {
    /// One gradient-ascent step: `theta += lr * gradient`.
    pub fn apply(&self, params: &mut SgnsParams, learning_rate: f64) {
        let k = params.dimension;
        for (d, g) in params.input[self.center * k..(self.center + 1) * k]
            .iter_mut()
            .zip(&self.d_input_center)
        {
            *d += learning_rate * g;
        }
        for (word, grad) in &self.d_output {
            for (d, g) in params.output[word * k..(word + 1) * k].iter_mut().zip(grad) {
                *d += learning_rate * g;
            }
        }
    }
}

/// Exact analytic gradient of [`pair_objective`] at the current parameters.
///
/// For every target `t` with label `y` (1 for the context, 0 for each
/// negative) and `s = sigmoid(u_t . v_c)`:
/// d/d u_t = (y - s) v_c, and d/d v_c accumulates (y - s) u_t.
/// Repeated targets accumulate, so duplicate negatives are handled exactly.
pub fn pair_gradient(
    params: &SgnsParams,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> SgnsGradient {
    let k = params.dimension;
    let v = params.input_row(center);
    let mut d_input_center = vec![0.0; k];
    let mut d_output: Vec<(usize, Vec<f64>)> = Vec::with_capacity(1 + negatives.len());

    let mut accumulate = |target: usize, label: f64, d_input_center: &mut Vec<f64>| {
        let u = params.output_row(target);
        let g = label - sigmoid(dot(u, v));
        for d in 0..k {
            d_input_center[d] += g * u[d];
        }
        let row = match d_output.iter_mut().find(|(w, _)| *w == target) {
            Some((_, row)) => row,
            None => {
                d_output.push((target, vec![0.0; k]));
                &mut d_output.last_mut().unwrap().1
            }
        };
        for d in 0..k {
            row[d] += g * v[d];
        }
    };

    accumulate(context, 1.0, &mut d_input_center);
    for &n in negatives {
        accumulate(n, 0.0, &mut d_input_center);
    }

    SgnsGradient {
        center,
        d_input_center,
        d_output,
    }
}
