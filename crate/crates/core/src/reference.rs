//! Brute-force reference implementations.
//!
//! These are the slow, obviously-correct routes used to check the production
//! implementations: pair counting for ARI, direct entropy sums for NMI,
//! exhaustive partition search for two-cluster K-Means, and a covariance
//! eigendecomposition for PCA explained variances. They share no code with
//! the paths they verify and are exercised both by the test suites and by the
//! pipeline's `verify` command.

use crate::analysis::eigen::jacobi_eigen;
use crate::matrix::Matrix;

/// Adjusted Rand index by direct enumeration of all sample pairs.
pub fn ari_pair_count(a: &[i64], b: &[i64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut together_both = 0u64; // same cluster in a and in b
    let mut together_a = 0u64;
    let mut together_b = 0u64;
    let mut total = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let same_a = a[i] == a[j];
            let same_b = b[i] == b[j];
            if same_a && same_b {
                together_both += 1;
            }
            if same_a {
                together_a += 1;
            }
            if same_b {
                together_b += 1;
            }
            total += 1;
        }
    }
    let index = together_both as f64;
    let expected = together_a as f64 * together_b as f64 / total as f64;
    let max_index = 0.5 * (together_a + together_b) as f64;
    if (max_index - expected).abs() == 0.0 {
        // Degenerate adjustment; identical degenerate partitions count as 1.
        return if same_partition(a, b) { 1.0 } else { 0.0 };
    }
    (index - expected) / (max_index - expected)
}

/// True when the two labelings induce the same partition (bijective relabel).
fn same_partition(a: &[i64], b: &[i64]) -> bool {
    use std::collections::HashMap;
    let mut fwd: HashMap<i64, i64> = HashMap::new();
    let mut bwd: HashMap<i64, i64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y || *bwd.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Normalized mutual information from direct entropy computation
/// (natural log, arithmetic-mean normalization, 0/0 -> 0).
pub fn nmi_entropy(a: &[i64], b: &[i64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    use std::collections::HashMap;
    let mut count_a: HashMap<i64, f64> = HashMap::new();
    let mut count_b: HashMap<i64, f64> = HashMap::new();
    let mut count_ab: HashMap<(i64, i64), f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *count_a.entry(x).or_insert(0.0) += 1.0;
        *count_b.entry(y).or_insert(0.0) += 1.0;
        *count_ab.entry((x, y)).or_insert(0.0) += 1.0;
    }
    let entropy = |counts: &HashMap<i64, f64>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_a = entropy(&count_a);
    let h_b = entropy(&count_b);
    let mut mi = 0.0;
    for (&(x, y), &c) in &count_ab {
        let p_xy = c / n;
        let p_x = count_a[&x] / n;
        let p_y = count_b[&y] / n;
        mi += p_xy * (p_xy / (p_x * p_y)).ln();
    }
    let norm = 0.5 * (h_a + h_b);
    if norm <= 0.0 {
        return 0.0;
    }
    (mi / norm).clamp(0.0, 1.0)
}

/// Minimum two-cluster inertia by trying every nonempty bipartition.
/// Only feasible for very small `n`; panics above 20 points.
pub fn kmeans_two_cluster_optimum(x: &Matrix) -> f64 {
    let n = x.rows();
    assert!(n <= 20, "exhaustive search is limited to 20 points");
    assert!(n >= 2);
    let d = x.cols();
    let mut best = f64::INFINITY;
    // Fix point 0 in cluster 0 to halve the search space.
    for mask in 0..(1u32 << (n - 1)) {
        let side = |i: usize| -> usize {
            if i == 0 {
                0
            } else {
                ((mask >> (i - 1)) & 1) as usize
            }
        };
        let mut counts = [0usize; 2];
        for i in 0..n {
            counts[side(i)] += 1;
        }
        if counts[0] == 0 || counts[1] == 0 {
            continue;
        }
        let mut centroids = [vec![0.0; d], vec![0.0; d]];
        for i in 0..n {
            let c = side(i);
            for (acc, &v) in centroids[c].iter_mut().zip(x.row(i)) {
                *acc += v;
            }
        }
        for (centroid, &count) in centroids.iter_mut().zip(&counts) {
            for v in centroid.iter_mut() {
                *v /= count as f64;
            }
        }
        let mut inertia = 0.0;
        for i in 0..n {
            let c = side(i);
            for (&centroid, &v) in centroids[c].iter().zip(x.row(i)) {
                let diff = v - centroid;
                inertia += diff * diff;
            }
        }
        if inertia < best {
            best = inertia;
        }
    }
    best
}

/// Eigenvalues of the population covariance matrix, descending.
/// This is the brute-force route used to verify PCA explained variances.
pub fn pca_covariance_eigenvalues(x: &Matrix) -> Vec<f64> {
    let (n, dim) = x.shape();
    let means = x.column_means();
    let mut cov = Matrix::zeros(dim, dim);
    for r in 0..n {
        let row = x.row(r);
        for i in 0..dim {
            let di = row[i] - means[i];
            for j in 0..dim {
                let dj = row[j] - means[j];
                let v = cov.get(i, j) + di * dj;
                cov.set(i, j, v);
            }
        }
    }
    cov.scale(1.0 / n as f64);
    let (eigs, _) = jacobi_eigen(&cov);
    eigs
}

/// Naive mean squared error: elementwise loop, no shared code with `nn::mse_loss`.
pub fn mse_naive(pred: &Matrix, target: &Matrix) -> f64 {
    assert_eq!(pred.shape(), target.shape());
    let mut acc = 0.0;
    for i in 0..pred.rows() {
        for j in 0..pred.cols() {
            let d = pred.get(i, j) - target.get(i, j);
            acc += d * d;
        }
    }
    acc / (pred.rows() * pred.cols()) as f64
}
