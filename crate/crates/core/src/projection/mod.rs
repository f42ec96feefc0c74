//! 2-D projections: exact t-SNE and a PCA view, plus deterministic scatter
//! plot emission.
//!
//! The t-SNE here is the exact O(n^2) formulation: per-point Gaussian
//! bandwidths found by binary search on the perplexity target, symmetrized
//! affinities, a Student-t low-dimensional kernel, and gradient descent with
//! momentum and an early-exaggeration phase. Two details serve determinism:
//! every reduction over points runs in a canonical order keyed on row
//! content (so permuting input rows permutes the output rows and changes
//! nothing else), and the embedding is initialized from a hash of each row's
//! bytes rather than from row position.

pub mod svg;

pub use svg::{emit_scatter, write_projection_csv};

use crate::analysis::{pca_fit, pca_transform};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, fnv1a64, Rng};

/// Gradient-descent step size. `Auto` scales with the input size,
/// `max(n / (4 * early_exaggeration), 50)`; a fixed rate of 200 is the
/// traditional default but measurably unstable at small n (stray points,
/// occasionally merged clusters), so the scaled rule is the default here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub n_iter: usize,
    pub learning_rate: LearningRate,
    /// Affinity multiplier during the first `exaggeration_iters` iterations.
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    /// Momentum before and after `exaggeration_iters`.
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            n_iter: 1000,
            learning_rate: LearningRate::Auto,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            seed: 42,
        }
    }
}

impl TsneConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if n < 10 {
            return Err(Error::Config(format!(
                "t-SNE needs at least 10 points, got {n}"
            )));
        }
        let upper = (n as f64 - 1.0) / 3.0;
        if !(self.perplexity > 1.0 && self.perplexity < upper) {
            return Err(Error::Config(format!(
                "perplexity {} infeasible for {n} points (must be in (1, {upper:.2}))",
                self.perplexity
            )));
        }
        if self.n_iter < 250 {
            return Err(Error::Config("n_iter must be >= 250".into()));
        }
        if self.exaggeration_iters > self.n_iter {
            return Err(Error::Config(
                "exaggeration_iters cannot exceed n_iter".into(),
            ));
        }
        Ok(())
    }

    fn effective_learning_rate(&self, n: usize) -> f64 {
        match self.learning_rate {
            LearningRate::Fixed(lr) => lr,
            LearningRate::Auto => (n as f64 / (4.0 * self.early_exaggeration)).max(50.0),
        }
    }

    fn describe(&self, n: usize) -> String {
        format!(
            "tsne perplexity={} n_iter={} lr={} exaggeration={}x{} momentum={}->{} seed={}",
            self.perplexity,
            self.n_iter,
            self.effective_learning_rate(n),
            self.early_exaggeration,
            self.exaggeration_iters,
            self.momentum_initial,
            self.momentum_final,
            self.seed
        )
    }
}

/// A 2-D embedding plus the KL diagnostics the tests pin down.
#[derive(Debug, Clone)]
pub struct Projection2D {
    pub coords: Matrix,
    /// KL divergence at the last iteration (0 sentinel for PCA views).
    pub final_kl: f64,
    pub kl_after_first_iter: f64,
    pub kl_after_exaggeration: f64,
    /// Human-readable snapshot of the configuration that produced this.
    pub config_summary: String,
}

/// Exact t-SNE to two dimensions.
pub fn tsne(x: &Matrix, cfg: &TsneConfig) -> Result<Projection2D> {
    let n = x.rows();
    cfg.validate(n)?;
    if !x.is_finite() {
        return Err(Error::Numerics("non-finite values in t-SNE input".into()));
    }
    let learning_rate = cfg.effective_learning_rate(n);

    // Canonical processing order keyed on row content: permuting the input
    // rows must only permute the output rows.
    let hashes: Vec<u64> = (0..n).map(|i| row_hash(x, i, cfg.seed)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (hashes[i], i));

    let p = symmetric_affinities(x, cfg.perplexity, &order)?;

    // Content-keyed initialization, small normal spread.
    let mut y = Matrix::zeros(n, 2);
    for i in 0..n {
        let mut rng = Rng::new(derive_seed(hashes[i], 0x7473_6e65));
        y.set(i, 0, 1e-4 * rng.next_normal());
        y.set(i, 1, 1e-4 * rng.next_normal());
    }

    let mut velocity = Matrix::zeros(n, 2);
    // Per-coordinate adaptive gains, the standard companion of the momentum
    // schedule: a gradient that keeps its sign accelerates, a flipping one
    // damps. Without them a learning rate of 200 flings points during the
    // exaggeration phase.
    let mut gains = Matrix::from_vec(n, 2, vec![1.0; n * 2]).expect("sized");
    const MIN_GAIN: f64 = 0.01;
    let mut kl_after_first_iter = f64::NAN;
    let mut kl_after_exaggeration = f64::NAN;
    let mut final_kl = f64::NAN;
    let mut weights = vec![0.0f64; n * n];

    for iter in 0..cfg.n_iter {
        let exaggeration = if iter < cfg.exaggeration_iters {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < cfg.exaggeration_iters {
            cfg.momentum_initial
        } else {
            cfg.momentum_final
        };

        // Student-t kernel weights and their total, in canonical order.
        let mut weight_sum = 0.0;
        for &i in &order {
            for &j in &order {
                if i == j {
                    weights[i * n + j] = 0.0;
                    continue;
                }
                let w = 1.0 / (1.0 + Matrix::row_distance_sq(&y, i, &y, j));
                weights[i * n + j] = w;
                weight_sum += w;
            }
        }

        // Gradient: 4 * sum_j (p_ij * exaggeration - q_ij) * w_ij * (y_i - y_j).
        for &i in &order {
            let mut g0 = 0.0;
            let mut g1 = 0.0;
            for &j in &order {
                if i == j {
                    continue;
                }
                let w = weights[i * n + j];
                let q = (w / weight_sum).max(1e-12);
                let factor = 4.0 * (p[i * n + j] * exaggeration - q) * w;
                g0 += factor * (y.get(i, 0) - y.get(j, 0));
                g1 += factor * (y.get(i, 1) - y.get(j, 1));
            }
            for (c, g) in [(0usize, g0), (1usize, g1)] {
                let same_direction = (g > 0.0) == (velocity.get(i, c) > 0.0);
                let gain = if same_direction {
                    (gains.get(i, c) * 0.8).max(MIN_GAIN)
                } else {
                    gains.get(i, c) + 0.2
                };
                gains.set(i, c, gain);
                let v = momentum * velocity.get(i, c) - learning_rate * gain * g;
                velocity.set(i, c, v);
            }
        }
        for &i in &order {
            y.set(i, 0, y.get(i, 0) + velocity.get(i, 0));
            y.set(i, 1, y.get(i, 1) + velocity.get(i, 1));
        }
        // Keep the embedding centered.
        let mut mean0 = 0.0;
        let mut mean1 = 0.0;
        for &i in &order {
            mean0 += y.get(i, 0);
            mean1 += y.get(i, 1);
        }
        mean0 /= n as f64;
        mean1 /= n as f64;
        for &i in &order {
            y.set(i, 0, y.get(i, 0) - mean0);
            y.set(i, 1, y.get(i, 1) - mean1);
        }
        if !y.is_finite() {
            return Err(Error::Numerics(format!(
                "t-SNE diverged at iteration {iter}"
            )));
        }

        let iteration_count = iter + 1;
        if iteration_count == 1 {
            kl_after_first_iter = kl_divergence(&p, &y, &order);
        }
        if iteration_count == cfg.exaggeration_iters {
            kl_after_exaggeration = kl_divergence(&p, &y, &order);
        }
        if iteration_count == cfg.n_iter {
            final_kl = kl_divergence(&p, &y, &order);
        }
    }

    Ok(Projection2D {
        coords: y,
        final_kl,
        kl_after_first_iter,
        kl_after_exaggeration,
        config_summary: cfg.describe(n),
    })
}

fn row_hash(x: &Matrix, row: usize, seed: u64) -> u64 {
    let mut bytes = Vec::with_capacity(x.cols() * 8 + 8);
    bytes.extend_from_slice(&seed.to_le_bytes());
    for v in x.row(row) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// Symmetrized affinity matrix: per-row Gaussian bandwidths are found by
/// binary search so each row's conditional entropy matches log(perplexity)
/// within 1e-5, then P = (P_c + P_c^T) / 2n.
fn symmetric_affinities(x: &Matrix, perplexity: f64, order: &[usize]) -> Result<Vec<f64>> {
    let n = x.rows();
    let target_entropy = perplexity.ln();
    let mut conditional = vec![0.0f64; n * n];
    let mut dist_sq = vec![0.0f64; n];
    for &i in order {
        for &j in order {
            dist_sq[j] = Matrix::row_distance_sq(x, i, x, j);
        }
        let mut beta = 1.0f64;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        let row = &mut conditional[i * n..(i + 1) * n];
        for _ in 0..200 {
            // P(j|i) for the current bandwidth, entropy in canonical order.
            let mut sum = 0.0;
            for &j in order {
                if j == i {
                    row[j] = 0.0;
                    continue;
                }
                let p = (-beta * dist_sq[j]).exp();
                row[j] = p;
                sum += p;
            }
            if sum <= 0.0 {
                // Bandwidth too narrow for this point's neighborhood.
                beta_max = beta;
                beta = if beta_min.is_infinite() {
                    beta / 2.0
                } else {
                    0.5 * (beta + beta_min)
                };
                continue;
            }
            let mut entropy = 0.0;
            for &j in order {
                if j == i || row[j] <= 0.0 {
                    continue;
                }
                let p = row[j] / sum;
                entropy -= p * p.ln();
            }
            let diff = entropy - target_entropy;
            if diff.abs() < 1e-5 {
                for &j in order {
                    if j != i {
                        row[j] /= sum;
                    }
                }
                break;
            }
            if diff > 0.0 {
                beta_min = beta;
                beta = if beta_max.is_infinite() {
                    beta * 2.0
                } else {
                    0.5 * (beta + beta_max)
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_infinite() {
                    beta / 2.0
                } else {
                    0.5 * (beta + beta_min)
                };
            }
        }
        // Ensure the row is normalized (covers loop exhaustion).
        let sum: f64 = order.iter().filter(|&&j| j != i).map(|&j| row[j]).sum();
        if sum > 0.0 {
            let already_normalized = (sum - 1.0).abs() < 1e-9;
            if !already_normalized {
                for &j in order {
                    if j != i {
                        row[j] /= sum;
                    }
                }
            }
        } else {
            return Err(Error::Numerics(format!(
                "perplexity search failed for row {i}"
            )));
        }
    }
    let mut p = vec![0.0f64; n * n];
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (conditional[i * n + j] + conditional[j * n + i]) * scale;
        }
    }
    Ok(p)
}

/// KL(P || Q) with the un-exaggerated affinities.
fn kl_divergence(p: &[f64], y: &Matrix, order: &[usize]) -> f64 {
    let n = y.rows();
    let mut weight_sum = 0.0;
    for &i in order {
        for &j in order {
            if i != j {
                weight_sum += 1.0 / (1.0 + Matrix::row_distance_sq(y, i, y, j));
            }
        }
    }
    let mut kl = 0.0;
    for &i in order {
        for &j in order {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            if pij <= 1e-12 {
                continue;
            }
            let w = 1.0 / (1.0 + Matrix::row_distance_sq(y, i, y, j));
            let q = (w / weight_sum).max(1e-12);
            kl += pij * (pij / q).ln();
        }
    }
    kl
}

/// Top-2 PCA scores as a projection view; `final_kl` is a 0 sentinel.
pub fn pca2d(x: &Matrix) -> Result<Projection2D> {
    if x.cols() < 2 {
        return Err(Error::Rank(format!(
            "pca2d needs at least 2 input dimensions, got {}",
            x.cols()
        )));
    }
    let model = pca_fit(x, 2)?;
    let coords = pca_transform(&model, x)?;
    Ok(Projection2D {
        coords,
        final_kl: 0.0,
        kl_after_first_iter: 0.0,
        kl_after_exaggeration: 0.0,
        config_summary: "pca2d".into(),
    })
}
