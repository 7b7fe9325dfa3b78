//! Two-dimensional principal-component projection of category vectors.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use super::AnalysisError;
use crate::embedding::EmbeddingMatrix;

/// Ratio under which the second singular value counts as numerically zero.
const DEGENERATE_RATIO: f64 = 1e-12;

/// Categories projected onto the top two principal components of their
/// mean-centered vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection2D {
    pub categories: Vec<String>,
    /// One `[x, y]` pair per category, in `categories` order.
    pub coordinates: Vec<[f64; 2]>,
    /// The two component directions, each of the original dimension.
    pub components: [Vec<f64>; 2],
    /// Share of total variance captured by each component.
    pub variance_explained: [f64; 2],
    /// True when the centered data has rank below 2; the second
    /// component is then arbitrary and its variance share is zero.
    pub degenerate: bool,
}

/// Projects every vocabulary vector onto the top two principal
/// components. Components are singular directions of the mean-centered
/// matrix, each oriented so its largest-magnitude entry is positive.
pub fn project_2d(matrix: &EmbeddingMatrix) -> Result<Projection2D, AnalysisError> {
    let n = matrix.len();
    let k = matrix.dimension();
    if n < 3 {
        return Err(AnalysisError::TooFewPoints { needed: 3, got: n });
    }

    let mut centered = DMatrix::<f64>::zeros(n, k);
    for i in 0..n {
        let row = matrix.vector_at(i);
        for (j, &v) in row.iter().enumerate() {
            centered[(i, j)] = v;
        }
    }
    for j in 0..k {
        let mean = centered.column(j).mean();
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }

    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sigma = &svd.singular_values;

    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let degenerate = sigma.len() < 2 || sigma[1] <= DEGENERATE_RATIO * sigma[0];

    let mut components = [vec![0.0; k], vec![0.0; k]];
    let mut variance = [0.0, 0.0];
    for c in 0..2 {
        if c < v_t.nrows() {
            components[c] = v_t.row(c).iter().copied().collect();
        }
        if c < sigma.len() && total > 0.0 {
            variance[c] = sigma[c] * sigma[c] / total;
        }
    }
    if degenerate {
        variance[1] = 0.0;
    }

    // Orient each component so its largest-magnitude entry is positive.
    for component in &mut components {
        let dominant = component
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if dominant < 0.0 {
            for v in component.iter_mut() {
                *v = -*v;
            }
        }
    }

    let mut coordinates = Vec::with_capacity(n);
    for i in 0..n {
        let row = centered.row(i);
        let mut point = [0.0; 2];
        for (c, item) in point.iter_mut().enumerate() {
            *item = row
                .iter()
                .zip(&components[c])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        coordinates.push(point);
    }

    let categories = matrix
        .vocabulary()
        .iter()
        .map(|(_, name, _)| name.to_string())
        .collect();

    Ok(Projection2D {
        categories,
        coordinates,
        components,
        variance_explained: variance,
        degenerate,
    })
}

/// Writes a projection as `category,x,y` CSV.
pub fn write_projection_csv(
    projection: &Projection2D,
    writer: impl Write,
) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["category", "x", "y"])?;
    for (name, point) in projection.categories.iter().zip(&projection.coordinates) {
        w.write_record([name.clone(), point[0].to_string(), point[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Builds a matrix whose published vectors are exactly `rows`.
    fn matrix_from_rows(rows: &[Vec<f64>]) -> EmbeddingMatrix {
        let k = rows[0].len();
        let mut text = format!("{} {}\n", rows.len(), k);
        for (i, row) in rows.iter().enumerate() {
            text.push_str(&format!("c{i}"));
            for v in row {
                text.push_str(&format!(" {v}"));
            }
            text.push('\n');
        }
        EmbeddingMatrix::import(text.as_bytes()).unwrap()
    }

    /// Largest eigenpairs of a symmetric matrix by cyclic Jacobi
    /// rotations; independent of the SVD under test.
    #[allow(clippy::needless_range_loop)]
    fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
        let n = a.len();
        let mut v = vec![vec![0.0; n]; n];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _ in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[i][j] * a[i][j];
                    }
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() < 1e-18 {
                        continue;
                    }
                    let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for i in 0..n {
                        let aip = a[i][p];
                        let aiq = a[i][q];
                        a[i][p] = c * aip - s * aiq;
                        a[i][q] = s * aip + c * aiq;
                    }
                    for j in 0..n {
                        let apj = a[p][j];
                        let aqj = a[q][j];
                        a[p][j] = c * apj - s * aqj;
                        a[q][j] = s * apj + c * aqj;
                    }
                    for i in 0..n {
                        let vip = v[i][p];
                        let viq = v[i][q];
                        v[i][p] = c * vip - s * viq;
                        v[i][q] = s * vip + c * viq;
                    }
                }
            }
        }
        let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
            .map(|j| (a[j][j], (0..n).map(|i| v[i][j]).collect()))
            .collect();
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
        pairs
    }

    #[test]
    fn axis_aligned_data_recovers_the_axes() {
        // Spread 4x wider along dimension 1 than dimension 0; zero elsewhere.
        let rows = vec![
            vec![1.0, 4.0, 0.0],
            vec![-1.0, -4.0, 0.0],
            vec![1.0, -4.0, 0.0],
            vec![-1.0, 4.0, 0.0],
        ];
        let p = project_2d(&matrix_from_rows(&rows)).unwrap();
        assert_abs_diff_eq!(p.components[0][1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.components[0][0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.components[1][0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p.components[1][2], 0.0, epsilon = 1e-10);
        assert!(p.variance_explained[0] > p.variance_explained[1]);
        assert_abs_diff_eq!(
            p.variance_explained[0] + p.variance_explained[1],
            1.0,
            epsilon = 1e-10
        );
        assert!(!p.degenerate);
    }

    #[test]
    fn rank_one_data_is_degenerate_but_still_projects() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| vec![i as f64 * 2.0, -(i as f64), i as f64 * 0.5])
            .collect();
        let p = project_2d(&matrix_from_rows(&rows)).unwrap();
        assert!(p.degenerate);
        assert_abs_diff_eq!(p.variance_explained[0], 1.0, epsilon = 1e-10);
        assert_eq!(p.variance_explained[1], 0.0);
        assert_eq!(p.coordinates.len(), 5);
        for point in &p.coordinates {
            assert_abs_diff_eq!(point[1], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn matches_jacobi_eigensolver_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10;
        let k = 5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let p = project_2d(&matrix_from_rows(&rows)).unwrap();

        let means: Vec<f64> = (0..k)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = vec![vec![0.0; k]; k];
        for (a, cov_row) in cov.iter_mut().enumerate() {
            for (b, entry) in cov_row.iter_mut().enumerate() {
                *entry = rows
                    .iter()
                    .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                    .sum::<f64>();
            }
        }
        let eigen = jacobi_eigen(cov);
        let total: f64 = eigen.iter().map(|(l, _)| l).sum();

        for (c, (value, vector)) in eigen.iter().take(2).enumerate() {
            assert_abs_diff_eq!(p.variance_explained[c], value / total, epsilon = 1e-8);
            // Directions agree up to sign.
            let dot: f64 = p.components[c]
                .iter()
                .zip(vector)
                .map(|(a, b)| a * b)
                .sum();
            assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn components_are_orthonormal_and_dominant_entry_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let p = project_2d(&matrix_from_rows(&rows)).unwrap();
        let norm =
            |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm(&p.components[0]), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(norm(&p.components[1]), 1.0, epsilon = 1e-10);
        let cross: f64 = p.components[0]
            .iter()
            .zip(&p.components[1])
            .map(|(a, b)| a * b)
            .sum();
        assert_abs_diff_eq!(cross, 0.0, epsilon = 1e-10);
        for component in &p.components {
            let dominant = component
                .iter()
                .copied()
                .max_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap();
            assert!(dominant > 0.0);
        }
    }

    #[test]
    fn too_few_vectors_is_an_error() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            project_2d(&matrix_from_rows(&rows)),
            Err(AnalysisError::TooFewPoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn projection_csv_has_expected_shape() {
        let rows = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ];
        let p = project_2d(&matrix_from_rows(&rows)).unwrap();
        let mut buf = Vec::new();
        write_projection_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "category,x,y");
        assert_eq!(lines.count(), 4);
        assert!(text.contains("c0,"));
    }
}
