//! Adam optimizer over a flat list of parameter tensors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates, one pair of buffers per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    /// `shapes` are the lengths of the parameter tensors, in update order.
    pub fn new(shapes: &[usize], hyper: AdamHyper) -> Self {
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam update with bias correction. The step count is incremented
    /// before correction. Non-finite gradients abort before any parameter is
    /// touched.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, grad) in grads.iter().enumerate() {
            if grad.len() != self.m[i].len() {
                return Err(Error::Shape(format!(
                    "tensor {i}: state has {} entries, grad has {}",
                    self.m[i].len(),
                    grad.len()
                )));
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerics(format!(
                    "non-finite gradient in tensor {i}; step aborted"
                )));
            }
        }
        self.t += 1;
        let AdamHyper {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((p, &g), m), v) in param.iter_mut().zip(*grad).zip(m).zip(v) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_but_advances_t() {
        let mut state = AdamState::new(&[3], AdamHyper::default());
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.0; 3];
        state.step(&mut [&mut p], &[&g]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_magnitude_is_lr_independent_of_gradient_scale() {
        // At t=1 the bias-corrected update is lr * g / (|g| + eps), so its
        // magnitude is lr * (1 - eps/(|g| + eps)) for any constant gradient.
        let hyper = AdamHyper::with_lr(1e-3);
        for &g_val in &[1e-3, 1.0, 1e3, -2.5] {
            let mut state = AdamState::new(&[4], hyper);
            let mut p = vec![0.0; 4];
            let g = vec![g_val; 4];
            state.step(&mut [&mut p], &[&g]).unwrap();
            for &value in &p {
                let magnitude = value.abs();
                assert!(
                    magnitude <= hyper.lr && magnitude > hyper.lr * (1.0 - 1e-4),
                    "step {magnitude} for gradient {g_val}"
                );
                assert_eq!(value.signum(), -g_val.signum());
            }
        }
    }

    #[test]
    fn identical_steps_are_deterministic() {
        let run = || {
            let mut state = AdamState::new(&[2], AdamHyper::default());
            let mut p = vec![0.3, -0.7];
            for i in 0..5 {
                let g = vec![0.1 * (i as f64 + 1.0), -0.2];
                state.step(&mut [&mut p], &[&g]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_lr_changes_nothing() {
        let mut state = AdamState::new(&[2], AdamHyper::with_lr(0.0));
        let mut p = vec![5.0, 6.0];
        state.step(&mut [&mut p], &[&[1.0, -1.0][..]]).unwrap();
        assert_eq!(p, vec![5.0, 6.0]);
    }

    #[test]
    fn non_finite_gradient_aborts_without_mutation() {
        let mut state = AdamState::new(&[2], AdamHyper::default());
        let mut p = vec![1.0, 2.0];
        let g = vec![f64::NAN, 0.0];
        let before = p.clone();
        assert!(matches!(
            state.step(&mut [&mut p], &[&g]),
            Err(Error::Numerics(_))
        ));
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 0);
    }
}
