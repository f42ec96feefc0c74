//! Clustering evaluation metrics: silhouette, adjusted Rand index, and
//! normalized mutual information.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Mean silhouette coefficient with the Euclidean metric, computed exactly.
///
/// Per sample: `(b - a) / max(a, b)` where `a` is the mean distance to the
/// sample's own cluster (excluding itself) and `b` the smallest mean distance
/// to any other cluster. Singleton clusters score 0, as does the degenerate
/// `a = b = 0` case. All pairwise distances are visited, so time is
/// O(n^2 * dim) with O(n * k) extra memory (per-cluster accumulators).
pub fn silhouette(x: &Matrix, labels: &[i64]) -> Result<f64> {
    let n = x.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {n} rows",
            labels.len()
        )));
    }
    let (ids, counts) = cluster_index(labels);
    let k = counts.len();
    if k < 2 {
        return Err(Error::MetricUndefined(
            "silhouette needs at least 2 clusters".into(),
        ));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0f64; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i == j {
                continue;
            }
            let dist = Matrix::row_distance_sq(x, i, x, j).sqrt();
            sums[ids[j]] += dist;
        }
        let own = ids[i];
        if counts[own] <= 1 {
            continue; // singleton convention: s = 0
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own {
                let mean = sums[c] / counts[c] as f64;
                if mean < b {
                    b = mean;
                }
            }
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Silhouette on a deterministic row subsample; for callers that explicitly
/// trade exactness for speed on large inputs.
pub fn silhouette_subsampled(
    x: &Matrix,
    labels: &[i64],
    max_samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = x.rows();
    if max_samples == 0 {
        return Err(Error::Config("max_samples must be >= 1".into()));
    }
    if n <= max_samples {
        return silhouette(x, labels);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut order);
    let mut keep = order[..max_samples].to_vec();
    keep.sort_unstable();
    let sub = x.select_rows(&keep);
    let sub_labels: Vec<i64> = keep.iter().map(|&i| labels[i]).collect();
    silhouette(&sub, &sub_labels)
}

/// Map arbitrary labels to dense cluster indices plus per-cluster counts.
fn cluster_index(labels: &[i64]) -> (Vec<usize>, Vec<usize>) {
    let mut lookup: HashMap<i64, usize> = HashMap::new();
    let mut ids = Vec::with_capacity(labels.len());
    let mut counts = Vec::new();
    for &label in labels {
        let next = lookup.len();
        let id = *lookup.entry(label).or_insert(next);
        if id == counts.len() {
            counts.push(0);
        }
        counts[id] += 1;
        ids.push(id);
    }
    (ids, counts)
}

/// True when the two labelings induce the same partition up to relabeling.
fn same_partition(a: &[i64], b: &[i64]) -> bool {
    let mut fwd: HashMap<i64, i64> = HashMap::new();
    let mut bwd: HashMap<i64, i64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y || *bwd.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Contingency table between two labelings, with marginals.
struct Contingency {
    cells: Vec<u64>,
    rows: usize,
    cols: usize,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    n: u64,
}

fn contingency(a: &[i64], b: &[i64]) -> Contingency {
    let (ids_a, counts_a) = cluster_index(a);
    let (ids_b, counts_b) = cluster_index(b);
    let rows = counts_a.len();
    let cols = counts_b.len();
    let mut cells = vec![0u64; rows * cols];
    for (&ia, &ib) in ids_a.iter().zip(&ids_b) {
        cells[ia * cols + ib] += 1;
    }
    Contingency {
        cells,
        rows,
        cols,
        row_sums: counts_a.iter().map(|&c| c as u64).collect(),
        col_sums: counts_b.iter().map(|&c| c as u64).collect(),
        n: a.len() as u64,
    }
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Adjusted Rand index: pair-counting agreement corrected for chance with the
/// hypergeometric expectation. Identical partitions (up to relabeling) score
/// exactly 1.
pub fn ari(a: &[i64], b: &[i64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "label vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(
            "ARI needs at least 2 samples".into(),
        ));
    }
    if same_partition(a, b) {
        return Ok(1.0);
    }
    let table = contingency(a, b);
    let index: u64 = table.cells.iter().map(|&c| choose2(c)).sum();
    let sum_a: u64 = table.row_sums.iter().map(|&c| choose2(c)).sum();
    let sum_b: u64 = table.col_sums.iter().map(|&c| choose2(c)).sum();
    let total = choose2(table.n) as f64;
    let expected = sum_a as f64 * sum_b as f64 / total;
    let max_index = 0.5 * (sum_a + sum_b) as f64;
    if max_index == expected {
        return Ok(0.0);
    }
    Ok((index as f64 - expected) / (max_index - expected))
}

/// Normalization choices for [`nmi_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmiNorm {
    /// Arithmetic mean of the entropies (the default).
    Arithmetic,
    Geometric,
    Min,
    Max,
}

/// NMI with the default arithmetic-mean normalization.
pub fn nmi(a: &[i64], b: &[i64]) -> Result<f64> {
    nmi_with(a, b, NmiNorm::Arithmetic)
}

/// Normalized mutual information (natural log). A single-cluster partition on
/// either side has zero entropy and scores 0; identical partitions with at
/// least two clusters score exactly 1.
pub fn nmi_with(a: &[i64], b: &[i64], norm: NmiNorm) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "label vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InsufficientData("NMI needs at least 1 sample".into()));
    }
    let table = contingency(a, b);
    if table.rows < 2 || table.cols < 2 {
        return Ok(0.0);
    }
    if same_partition(a, b) {
        return Ok(1.0);
    }
    let n = table.n as f64;
    let entropy = |sums: &[u64]| -> f64 {
        sums.iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_a = entropy(&table.row_sums);
    let h_b = entropy(&table.col_sums);
    let mut mi = 0.0;
    for r in 0..table.rows {
        for c in 0..table.cols {
            let cell = table.cells[r * table.cols + c];
            if cell == 0 {
                continue;
            }
            let p = cell as f64 / n;
            let pa = table.row_sums[r] as f64 / n;
            let pb = table.col_sums[c] as f64 / n;
            mi += p * (p / (pa * pb)).ln();
        }
    }
    let denom = match norm {
        NmiNorm::Arithmetic => 0.5 * (h_a + h_b),
        NmiNorm::Geometric => (h_a * h_b).sqrt(),
        NmiNorm::Min => h_a.min(h_b),
        NmiNorm::Max => h_a.max(h_b),
    };
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}
