//! Shared fixtures for the criterion benchmarks.

use trilatent::data::{synth_triplets, Split, SynthSpec, TripletDataset};
use trilatent::matrix::Matrix;
use trilatent::rng::Rng;

pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.next_normal()).collect())
        .expect("sized")
}

/// Clustered points: `k` Gaussian blobs in `dim` dimensions.
pub fn blob_matrix(seed: u64, n: usize, dim: usize, k: usize) -> (Matrix, Vec<i64>) {
    let mut rng = Rng::new(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| 6.0 * rng.next_normal()).collect())
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        rows.push(
            centers[c]
                .iter()
                .map(|&v| v + rng.next_normal())
                .collect::<Vec<f64>>(),
        );
        labels.push(c as i64);
    }
    (Matrix::from_rows(&rows).expect("rectangular"), labels)
}

/// A small aligned dataset at reduced feature widths.
pub fn small_dataset(seed: u64) -> TripletDataset {
    synth_triplets(
        &SynthSpec {
            n_classes: 8,
            samples_per_class: 32,
            dims: (24, 96, 64),
            class_separation: 1.0,
            noise_sigma: 0.1,
            seed,
        },
        Split::Train,
    )
    .expect("valid spec")
}
