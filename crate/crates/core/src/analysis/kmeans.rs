//! K-Means clustering: Lloyd's algorithm with k-means++ seeding and
//! best-of-restarts selection.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid movement.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            n_restarts: 10,
            max_iter: 300,
            tol: 1e-4,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    /// Lloyd iterations of the winning restart.
    pub n_iter: usize,
    /// Index of the winning restart (first wins ties, so a parallel driver
    /// selects the same run as a serial one).
    pub restart: usize,
}

pub(crate) struct SingleRun {
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
    pub n_iter: usize,
    /// Inertia after each assignment step; non-increasing by construction.
    /// Only inspected by the monotonicity property test.
    #[allow(dead_code)]
    pub inertia_trace: Vec<f64>,
}

/// Best-of-restarts K-Means. Restart `r` draws its randomness from
/// `seed + r`, so runs are reproducible and order-independent.
pub fn kmeans(x: &Matrix, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let n = x.rows();
    if cfg.k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if cfg.k > n {
        return Err(Error::Config(format!(
            "k = {} exceeds the {n} available samples",
            cfg.k
        )));
    }
    if cfg.n_restarts == 0 {
        return Err(Error::Config("n_restarts must be >= 1".into()));
    }
    if !x.is_finite() {
        return Err(Error::Numerics("non-finite values in K-Means input".into()));
    }
    let mut best: Option<(SingleRun, usize)> = None;
    for restart in 0..cfg.n_restarts {
        let mut rng = Rng::new(cfg.seed.wrapping_add(restart as u64));
        let run = lloyd_single(x, cfg, &mut rng);
        let better = match &best {
            Some((current, _)) => run.inertia < current.inertia,
            None => true,
        };
        if better {
            best = Some((run, restart));
        }
    }
    let (run, restart) = best.expect("n_restarts >= 1");
    Ok(KMeansResult {
        assignment: run.assignment,
        centroids: run.centroids,
        inertia: run.inertia,
        n_iter: run.n_iter,
        restart,
    })
}

pub(crate) fn lloyd_single(x: &Matrix, cfg: &KMeansConfig, rng: &mut Rng) -> SingleRun {
    let n = x.rows();
    let mut centroids = plus_plus_init(x, cfg.k, rng);
    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();
    let mut n_iter = 0;
    for iter in 0..cfg.max_iter {
        n_iter = iter + 1;
        let inertia = assign(x, &centroids, &mut assignment);
        trace.push(inertia);
        let new_centroids = update_centroids(x, &assignment, cfg.k, &centroids, rng);
        let shift = max_centroid_shift(&centroids, &new_centroids);
        centroids = new_centroids;
        if shift < cfg.tol {
            break;
        }
    }
    // Final assignment against the converged centroids.
    let inertia = assign(x, &centroids, &mut assignment);
    trace.push(inertia);
    SingleRun {
        assignment,
        centroids,
        inertia,
        n_iter,
        inertia_trace: trace,
    }
}

/// Greedy k-means++ seeding: the first centroid is uniform; each subsequent
/// one is chosen from `2 + floor(ln k)` candidates sampled with probability
/// proportional to squared distance from the chosen set, keeping the
/// candidate that minimizes the resulting potential.
fn plus_plus_init(x: &Matrix, k: usize, rng: &mut Rng) -> Matrix {
    let n = x.rows();
    let d = x.cols();
    let n_candidates = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Matrix::zeros(k, d);
    let first = rng.next_index(n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut min_dist = vec![0.0f64; n];
    for i in 0..n {
        min_dist[i] = Matrix::row_distance_sq(x, i, &centroids, 0);
    }
    for c in 1..k {
        let total: f64 = min_dist.iter().sum();
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for _ in 0..n_candidates {
            let candidate = if total > 0.0 {
                rng.weighted_index(&min_dist)
            } else {
                // All points coincide with chosen centroids; any index works.
                rng.next_index(n)
            };
            let mut trial = min_dist.clone();
            let mut potential = 0.0;
            for (i, t) in trial.iter_mut().enumerate() {
                let dist = Matrix::row_distance_sq(x, i, x, candidate);
                if dist < *t {
                    *t = dist;
                }
                potential += *t;
            }
            let better = match &best {
                Some((_, best_potential, _)) => potential < *best_potential,
                None => true,
            };
            if better {
                best = Some((candidate, potential, trial));
            }
        }
        let (winner, _, trial) = best.expect("at least one candidate");
        centroids.row_mut(c).copy_from_slice(x.row(winner));
        min_dist = trial;
    }
    centroids
}

/// Assign each row to its nearest centroid; returns the resulting inertia.
fn assign(x: &Matrix, centroids: &Matrix, assignment: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for i in 0..x.rows() {
        let mut best = f64::INFINITY;
        let mut best_c = 0;
        for c in 0..centroids.rows() {
            let dist = Matrix::row_distance_sq(x, i, centroids, c);
            if dist < best {
                best = dist;
                best_c = c;
            }
        }
        assignment[i] = best_c;
        inertia += best;
    }
    inertia
}

/// Mean of assigned rows per cluster; empty clusters are reseeded to the
/// point farthest from its assigned centroid.
fn update_centroids(
    x: &Matrix,
    assignment: &[usize],
    k: usize,
    previous: &Matrix,
    _rng: &mut Rng,
) -> Matrix {
    let d = x.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (s, &v) in sums.row_mut(c).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    let mut taken: Vec<usize> = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            for s in sums.row_mut(c) {
                *s *= inv;
            }
        } else {
            // Farthest point from its current centroid, skipping points
            // already used to reseed another empty cluster this round.
            let mut far_idx = 0;
            let mut far_dist = -1.0;
            for (i, &a) in assignment.iter().enumerate() {
                if taken.contains(&i) {
                    continue;
                }
                let dist = Matrix::row_distance_sq(x, i, previous, a);
                if dist > far_dist {
                    far_dist = dist;
                    far_idx = i;
                }
            }
            taken.push(far_idx);
            sums.row_mut(c).copy_from_slice(x.row(far_idx));
        }
    }
    sums
}

fn max_centroid_shift(old: &Matrix, new: &Matrix) -> f64 {
    let mut max_shift = 0.0f64;
    for c in 0..old.rows() {
        let shift = Matrix::row_distance_sq(old, c, new, c).sqrt();
        if shift > max_shift {
            max_shift = shift;
        }
    }
    max_shift
}

/// Sum of squared distances of rows to given centroids under an assignment.
pub fn inertia_of(x: &Matrix, centroids: &Matrix, assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| Matrix::row_distance_sq(x, i, centroids, c))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn blob(rng: &mut Rng, center: &[f64], spread: f64, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                center
                    .iter()
                    .map(|&c| c + spread * rng.next_normal())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![3.0, 2.0], vec![5.0, 4.0]]).unwrap();
        let result = kmeans(&x, &KMeansConfig::new(1, 0)).unwrap();
        assert_eq!(result.centroids.row(0), &[3.0, 2.0]);
        // Inertia = n * total variance = sum of squared deviations.
        let expected: f64 = x
            .column_variances()
            .iter()
            .map(|v| v * x.rows() as f64)
            .sum();
        assert!((result.inertia - expected).abs() < 1e-12);
    }

    #[test]
    fn four_corners_four_clusters() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let result = kmeans(&x, &KMeansConfig::new(4, 3)).unwrap();
        assert_eq!(result.inertia, 0.0);
        let mut sorted = result.assignment.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn matches_exhaustive_two_cluster_optimum() {
        // Oracle: enumerate every bipartition of 8 random points.
        let mut rng = Rng::new(5);
        for trial in 0..20 {
            let mut rows = blob(&mut rng, &[0.0, 0.0, 0.0], 1.0, 4);
            rows.extend(blob(&mut rng, &[2.0, -1.0, 0.5], 1.0, 4));
            let x = Matrix::from_rows(&rows).unwrap();
            let result = kmeans(&x, &KMeansConfig::new(2, trial as u64)).unwrap();
            let optimum = crate::reference::kmeans_two_cluster_optimum(&x);
            assert!(
                result.inertia <= optimum + 1e-9,
                "trial {trial}: {} vs optimum {optimum}",
                result.inertia
            );
        }
    }

    #[test]
    fn inertia_is_monotone_within_a_run() {
        let mut rng = Rng::new(11);
        let mut rows = blob(&mut rng, &[0.0, 0.0], 1.5, 40);
        rows.extend(blob(&mut rng, &[4.0, 4.0], 1.5, 40));
        rows.extend(blob(&mut rng, &[-4.0, 4.0], 1.5, 40));
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = KMeansConfig::new(3, 1);
        let mut run_rng = Rng::new(cfg.seed);
        let run = lloyd_single(&x, &cfg, &mut run_rng);
        for w in run.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "inertia increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        let mut rng = Rng::new(13);
        let rows = blob(&mut rng, &[0.0; 4], 1.0, 50);
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = KMeansConfig::new(5, 99);
        let a = kmeans(&x, &cfg).unwrap();
        let b = kmeans(&x, &cfg).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.inertia.to_bits(), b.inertia.to_bits());
        assert_eq!(a.restart, b.restart);
    }

    #[test]
    fn k_larger_than_n_is_config_error() {
        let x = Matrix::zeros(3, 2);
        assert!(matches!(
            kmeans(&x, &KMeansConfig::new(4, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn duplicate_points_with_k_equal_distinct() {
        // More clusters than distinct points exercises empty-cluster reseeding.
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![5.0, 5.0],
            vec![5.0, 5.0],
            vec![9.0, 0.0],
        ])
        .unwrap();
        let result = kmeans(&x, &KMeansConfig::new(3, 7)).unwrap();
        assert!(result.inertia < 1e-12);
    }
}
