//! Principal component analysis.
//!
//! Fitting mean-centers the data and extracts the top right singular
//! directions. Narrow inputs (up to 64 columns) go through an exact one-sided
//! Jacobi SVD of the centered matrix; wider inputs form the covariance and
//! use block subspace iteration for the leading eigenpairs. Components follow
//! the sign convention that each column's largest-magnitude entry is positive.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::eigen::{onesided_jacobi_svd, top_eigenpairs_subspace};

/// Above this many columns PCA switches from exact SVD to subspace iteration.
const EXACT_SVD_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `[dim x d]`, orthonormal columns.
    pub components: Matrix,
    /// Population covariance eigenvalues, non-increasing.
    pub explained_variance: Vec<f64>,
}

/// Fit a `d`-component PCA on `x` (`[n x dim]`).
pub fn pca_fit(x: &Matrix, d: usize) -> Result<PcaModel> {
    let (n, dim) = x.shape();
    if n < 2 {
        return Err(Error::InsufficientData(
            "PCA needs at least 2 samples".into(),
        ));
    }
    if d == 0 || d > dim.min(n - 1) {
        return Err(Error::Rank(format!(
            "cannot extract {d} components from {n} samples of dimension {dim}"
        )));
    }
    if !x.is_finite() {
        return Err(Error::Numerics("non-finite values in PCA input".into()));
    }
    let mean = x.column_means();
    let mut centered = x.clone();
    for r in 0..n {
        for (v, &m) in centered.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let (explained_variance, components) = if dim <= EXACT_SVD_MAX_DIM {
        let (singular, v) = onesided_jacobi_svd(&centered);
        let variances: Vec<f64> = singular[..d].iter().map(|s| s * s / n as f64).collect();
        let mut comps = Matrix::zeros(dim, d);
        for j in 0..d {
            for r in 0..dim {
                comps.set(r, j, v.get(r, j));
            }
        }
        (variances, comps)
    } else {
        let mut covariance = centered.matmul_transpose_self(&centered);
        covariance.scale(1.0 / n as f64);
        let (eigs, vectors) = top_eigenpairs_subspace(&covariance, d);
        (eigs.into_iter().map(|e| e.max(0.0)).collect(), vectors)
    };
    let mut model = PcaModel {
        mean,
        components,
        explained_variance,
    };
    fix_signs(&mut model.components);
    Ok(model)
}

/// Flip each component so its largest-magnitude entry (earliest on ties) is
/// positive. Keeps fitted models comparable across runs.
fn fix_signs(components: &mut Matrix) {
    let (dim, d) = components.shape();
    for j in 0..d {
        let mut best = 0.0f64;
        let mut best_row = 0;
        for r in 0..dim {
            let v = components.get(r, j).abs();
            if v > best {
                best = v;
                best_row = r;
            }
        }
        if components.get(best_row, j) < 0.0 {
            for r in 0..dim {
                let v = -components.get(r, j);
                components.set(r, j, v);
            }
        }
    }
}

/// Project rows: `(x - mean) * components`.
pub fn pca_transform(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.mean.len() {
        return Err(Error::Shape(format!(
            "input is {}-d, model was fit on {}-d data",
            x.cols(),
            model.mean.len()
        )));
    }
    let mut centered = x.clone();
    for r in 0..centered.rows() {
        for (v, &m) in centered.row_mut(r).iter_mut().zip(&model.mean) {
            *v -= m;
        }
    }
    Ok(centered.matmul(&model.components))
}

/// Map scores back to the original space: `y * components^T + mean`.
pub fn pca_inverse_transform(model: &PcaModel, y: &Matrix) -> Result<Matrix> {
    if y.cols() != model.components.cols() {
        return Err(Error::Shape(format!(
            "scores are {}-d, model has {} components",
            y.cols(),
            model.components.cols()
        )));
    }
    let mut out = y.matmul_transpose_other(&model.components);
    for r in 0..out.rows() {
        for (v, &m) in out.row_mut(r).iter_mut().zip(&model.mean) {
            *v += m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_matrix(seed: u64, rows: usize, cols: usize) -> Matrix {
        let mut rng = Rng::new(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.next_normal()).collect())
            .unwrap()
    }

    #[test]
    fn collinear_points_give_diagonal_direction() {
        // Points on y = x: first component ~ (1,1)/sqrt(2), second variance ~ 0.
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, i as f64]).collect();
        let x = Matrix::from_rows(&pts).unwrap();
        let model = pca_fit(&x, 2).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((model.components.get(0, 0) - inv_sqrt2).abs() < 1e-10);
        assert!((model.components.get(1, 0) - inv_sqrt2).abs() < 1e-10);
        assert!(model.explained_variance[1].abs() < 1e-18);
    }

    #[test]
    fn full_rank_round_trip() {
        let x = random_matrix(1, 30, 6);
        let model = pca_fit(&x, 6).unwrap();
        let scores = pca_transform(&model, &x).unwrap();
        let back = pca_inverse_transform(&model, &scores).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn explained_variance_matches_covariance_eigenvalues() {
        // Oracle: brute-force eigendecomposition of the covariance matrix,
        // an independent route from the one-sided SVD used by pca_fit.
        let x = random_matrix(2, 50, 8);
        let model = pca_fit(&x, 8).unwrap();
        let oracle = crate::reference::pca_covariance_eigenvalues(&x);
        for (got, want) in model.explained_variance.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn components_are_orthonormal() {
        let x = random_matrix(3, 40, 10);
        let model = pca_fit(&x, 5).unwrap();
        let gram = model.components.matmul_transpose_self(&model.components);
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram.get(i, j) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn transform_of_mean_row_is_zero() {
        let x = random_matrix(4, 25, 5);
        let model = pca_fit(&x, 3).unwrap();
        let mean_row = Matrix::from_vec(1, 5, model.mean.clone()).unwrap();
        let out = pca_transform(&model, &mean_row).unwrap();
        assert!(out.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn transformed_data_is_centered() {
        let x = random_matrix(5, 60, 7);
        let model = pca_fit(&x, 4).unwrap();
        let scores = pca_transform(&model, &x).unwrap();
        for mean in scores.column_means() {
            assert!(mean.abs() < 1e-10, "column mean {mean}");
        }
    }

    #[test]
    fn full_dim_transform_preserves_distances() {
        let x = random_matrix(6, 20, 5);
        let model = pca_fit(&x, 5).unwrap();
        let scores = pca_transform(&model, &x).unwrap();
        for i in 0..20 {
            for j in (i + 1)..20 {
                let orig = Matrix::row_distance_sq(&x, i, &x, j);
                let proj = Matrix::row_distance_sq(&scores, i, &scores, j);
                assert!((orig - proj).abs() < 1e-9 * orig.max(1.0));
            }
        }
    }

    #[test]
    fn too_many_components_is_rank_error() {
        let x = random_matrix(7, 10, 4);
        assert!(matches!(pca_fit(&x, 5), Err(Error::Rank(_))));
        // n - 1 bound: 3 samples support at most 2 components.
        let x = random_matrix(8, 3, 4);
        assert!(matches!(pca_fit(&x, 3), Err(Error::Rank(_))));
    }

    #[test]
    fn wide_path_agrees_with_exact_path() {
        // 80-dim input takes the subspace route; compare against the exact
        // covariance eigendecomposition oracle.
        let x = random_matrix(9, 120, 80);
        let model = pca_fit(&x, 6).unwrap();
        let oracle = crate::reference::pca_covariance_eigenvalues(&x);
        for (got, want) in model.explained_variance.iter().zip(oracle.iter().take(6)) {
            assert!((got - want).abs() < 1e-7 * oracle[0], "{got} vs {want}");
        }
        let gram = model.components.matmul_transpose_self(&model.components);
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram.get(i, j) - expected).abs() < 1e-9);
            }
        }
    }
}
