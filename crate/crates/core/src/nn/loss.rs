//! Mean squared error over all batch elements.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `loss = mean((pred - target)^2)` over all `B * dim` elements, together
/// with `d loss / d pred = 2 (pred - target) / (B * dim)`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let count = (pred.rows() * pred.cols()) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    for ((g, &p), &t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data())
        .zip(target.data())
    {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / count;
    }
    Ok((loss / count, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn identical_inputs_give_zero() {
        let m = Matrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let (loss, grad) = mse_loss(&m, &m).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn unit_case() {
        let pred = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let target = Matrix::from_rows(&[vec![0.0]]).unwrap();
        let (loss, grad) = mse_loss(&pred, &target).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad.data(), &[2.0]);
    }

    #[test]
    fn matches_naive_summation() {
        // Oracle: elementwise brute-force sum divided by the element count.
        let mut rng = Rng::new(31);
        let pred = Matrix::from_vec(7, 5, (0..35).map(|_| rng.next_normal()).collect()).unwrap();
        let target = Matrix::from_vec(7, 5, (0..35).map(|_| rng.next_normal()).collect()).unwrap();
        let (loss, _) = mse_loss(&pred, &target).unwrap();
        let mut naive = 0.0;
        for i in 0..7 {
            for j in 0..5 {
                let d = pred.get(i, j) - target.get(i, j);
                naive += d * d;
            }
        }
        naive /= 35.0;
        assert!((loss - naive).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(mse_loss(&a, &b), Err(Error::Shape(_))));
    }
}
