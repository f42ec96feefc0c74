//! Weighted early fusion of the three modality feature blocks.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-modality reweighting coefficients for concatenation fusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl FusionWeights {
    pub fn validate(&self) -> Result<()> {
        let values = [self.alpha, self.beta, self.gamma];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "fusion weights must be finite and nonnegative".into(),
            ));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("fusion weights cannot all be zero".into()));
        }
        Ok(())
    }
}

/// Row-wise weighted concatenation `[alpha*image | beta*audio | gamma*text]`.
pub fn fuse_concat(
    image: &FeatureMatrix,
    audio: &FeatureMatrix,
    text: &FeatureMatrix,
    weights: &FusionWeights,
) -> Result<Matrix> {
    weights.validate()?;
    let n = image.n_samples();
    if audio.n_samples() != n || text.n_samples() != n {
        return Err(Error::Alignment(format!(
            "row counts differ: image {n}, audio {}, text {}",
            audio.n_samples(),
            text.n_samples()
        )));
    }
    let dim = image.dim() + audio.dim() + text.dim();
    let mut out = Matrix::zeros(n, dim);
    for r in 0..n {
        let row = out.row_mut(r);
        let (img_part, rest) = row.split_at_mut(image.dim());
        let (aud_part, txt_part) = rest.split_at_mut(audio.dim());
        for (o, &v) in img_part.iter_mut().zip(image.values().row(r)) {
            *o = weights.alpha * v;
        }
        for (o, &v) in aud_part.iter_mut().zip(audio.values().row(r)) {
            *o = weights.beta * v;
        }
        for (o, &v) in txt_part.iter_mut().zip(text.values().row(r)) {
            *o = weights.gamma * v;
        }
    }
    Ok(out)
}
