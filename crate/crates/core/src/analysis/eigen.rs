//! Dense symmetric eigendecomposition and SVD kernels used by PCA.
//!
//! Two routes are provided. Small problems use exact Jacobi methods
//! (one-sided Jacobi on the data matrix for SVD, cyclic Jacobi for symmetric
//! matrices). Wide matrices, where a full Jacobi pass would be too slow, use
//! seeded block subspace iteration on the covariance to recover only the
//! leading eigenpairs.

use crate::matrix::Matrix;
use crate::rng::Rng;

/// Fixed seed for the subspace-iteration start block; part of the
/// determinism contract, not a tunable.
const SUBSPACE_INIT_SEED: u64 = 0x5053_4541;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns eigenvalues in descending order and eigenvectors as the
/// corresponding columns.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert_eq!(a.rows(), a.cols(), "jacobi_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = identity(n);
    let frobenius: f64 = a.data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = (frobenius * 1e-15).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).abs();
            }
        }
        if off < stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() < stop / (n * n) as f64 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_symmetric(&mut m, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m.get(i, i), i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let eigenvalues: Vec<f64> = pairs.iter().map(|&(val, _)| val).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &(_, src)) in pairs.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    (eigenvalues, vectors)
}

fn identity(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, 1.0);
    }
    m
}

/// Apply the two-sided Jacobi rotation on rows/cols p, q of a symmetric matrix.
fn rotate_symmetric(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    for i in 0..n {
        if i != p && i != q {
            let aip = m.get(i, p);
            let aiq = m.get(i, q);
            let new_p = c * aip - s * aiq;
            let new_q = s * aip + c * aiq;
            m.set(i, p, new_p);
            m.set(p, i, new_p);
            m.set(i, q, new_q);
            m.set(q, i, new_q);
        }
    }
    let app = m.get(p, p);
    let aqq = m.get(q, q);
    let apq = m.get(p, q);
    m.set(p, p, c * c * app - 2.0 * s * c * apq + s * s * aqq);
    m.set(q, q, s * s * app + 2.0 * s * c * apq + c * c * aqq);
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.rows() {
        let vp = m.get(r, p);
        let vq = m.get(r, q);
        m.set(r, p, c * vp - s * vq);
        m.set(r, q, s * vp + c * vq);
    }
}

/// One-sided Jacobi SVD: orthogonalizes the columns of `x` by plane
/// rotations. Returns singular values in descending order and the right
/// singular vectors as columns. Left vectors are not formed.
pub fn onesided_jacobi_svd(x: &Matrix) -> (Vec<f64>, Matrix) {
    let (n, d) = x.shape();
    let mut w = x.clone();
    let mut v = identity(d);
    let scale: f64 = x.data().iter().map(|a| a * a).sum::<f64>();
    let tol = (scale * 1e-30).max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..n {
                    let a = w.get(r, p);
                    let b = w.get(r, q);
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma * gamma <= tol * 1e-2 || gamma * gamma < 1e-28 * alpha * beta {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut norms: Vec<(f64, usize)> = (0..d)
        .map(|j| {
            let mut acc = 0.0;
            for r in 0..n {
                let val = w.get(r, j);
                acc += val * val;
            }
            (acc.sqrt(), j)
        })
        .collect();
    norms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let singular: Vec<f64> = norms.iter().map(|&(s, _)| s).collect();
    let mut vectors = Matrix::zeros(d, d);
    for (dst, &(_, src)) in norms.iter().enumerate() {
        for r in 0..d {
            vectors.set(r, dst, v.get(r, src));
        }
    }
    (singular, vectors)
}

/// Orthonormalize the columns of `m` in place by modified Gram-Schmidt with
/// one re-orthogonalization pass. Degenerate columns are replaced with a
/// deterministic fallback direction.
fn orthonormalize_columns(m: &mut Matrix) {
    let (n, k) = m.shape();
    for j in 0..k {
        for _pass in 0..2 {
            for i in 0..j {
                let mut dot = 0.0;
                for r in 0..n {
                    dot += m.get(r, i) * m.get(r, j);
                }
                for r in 0..n {
                    let val = m.get(r, j) - dot * m.get(r, i);
                    m.set(r, j, val);
                }
            }
        }
        let mut norm = 0.0;
        for r in 0..n {
            let val = m.get(r, j);
            norm += val * val;
        }
        let norm = norm.sqrt();
        if norm > 1e-150 {
            for r in 0..n {
                let val = m.get(r, j) / norm;
                m.set(r, j, val);
            }
        } else {
            for r in 0..n {
                m.set(r, j, if r == j % n { 1.0 } else { 0.0 });
            }
        }
    }
}

/// Leading eigenpairs of a symmetric PSD matrix by block subspace iteration
/// with periodic Rayleigh-Ritz extraction. Deterministic: the start block is
/// derived from a fixed internal seed.
pub fn top_eigenpairs_subspace(c: &Matrix, k: usize) -> (Vec<f64>, Matrix) {
    assert_eq!(c.rows(), c.cols());
    let d = c.rows();
    assert!(k <= d);
    let block = (k + 8).min(d);
    let mut rng = Rng::new(SUBSPACE_INIT_SEED);
    let mut v = Matrix::from_vec(
        d,
        block,
        (0..d * block).map(|_| rng.next_normal()).collect(),
    )
    .expect("sized above");
    orthonormalize_columns(&mut v);

    let mut last_eigs: Option<Vec<f64>> = None;
    let mut result: Option<(Vec<f64>, Matrix)> = None;
    let max_rounds = 40;
    let power_steps = 4;
    for _round in 0..max_rounds {
        for _ in 0..power_steps {
            let mut y = c.matmul(&v);
            orthonormalize_columns(&mut y);
            v = y;
        }
        // Rayleigh-Ritz on the current block.
        let cv = c.matmul(&v);
        let t = v.matmul_transpose_self(&cv);
        // Symmetrize against round-off before the eigensolve.
        let mut t_sym = Matrix::zeros(block, block);
        for i in 0..block {
            for j in 0..block {
                t_sym.set(i, j, 0.5 * (t.get(i, j) + t.get(j, i)));
            }
        }
        let (eigs, rot) = jacobi_eigen(&t_sym);
        let ritz = v.matmul(&rot);
        let top: Vec<f64> = eigs[..k].to_vec();
        let converged = match &last_eigs {
            Some(prev) => {
                let scale = top[0].abs().max(1e-300);
                prev.iter()
                    .zip(&top)
                    .all(|(a, b)| (a - b).abs() <= 1e-11 * scale)
            }
            None => false,
        };
        last_eigs = Some(top.clone());
        let mut top_vectors = Matrix::zeros(d, k);
        for j in 0..k {
            for r in 0..d {
                top_vectors.set(r, j, ritz.get(r, j));
            }
        }
        result = Some((top, top_vectors));
        if converged {
            break;
        }
        v = ritz;
    }
    result.expect("at least one round runs")
}
