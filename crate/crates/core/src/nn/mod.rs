//! Minimal deterministic dense network engine.
//!
//! An [`Mlp`] is a fixed stack of layers: `Dense -> BatchNorm -> ReLU` per
//! hidden block, with a plain `Dense` output layer so the final activations
//! span all of R. Forward passes are pure and return a [`Tape`] of cached
//! intermediates; [`Mlp::backward`] consumes the tape (by value, so it cannot
//! be replayed) and produces exact reverse-mode gradients, including the
//! batch-norm terms that couple every row of the batch through the batch
//! statistics.
//!
//! Everything is `f64`. Layers hold no hidden global state: train-mode
//! forward computes batch statistics into the tape, and running statistics
//! are folded back in explicitly via [`Mlp::update_running_stats`].

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod serialize;

pub use adam::{AdamHyper, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::mse_loss;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Forward-pass mode: batch statistics (Train) or running statistics (Eval).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected layer; `weights` is `[in_dim x out_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    /// He-uniform weights, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let limit = (6.0 / in_dim as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(in_dim, out_dim, data).expect("sized above"),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Batch normalization over the batch dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.1;

impl BatchNormLayer {
    pub fn init(dim: usize) -> Self {
        BatchNormLayer {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: BATCHNORM_MOMENTUM,
            eps: BATCHNORM_EPS,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNormLayer),
    Relu,
}

impl Layer {
    fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::BatchNorm(_) => "batchnorm",
            Layer::Relu => "relu",
        }
    }
}

/// Per-layer cached intermediates from one forward pass.
#[derive(Debug, Clone)]
enum LayerTape {
    Dense {
        input: Matrix,
    },
    BatchNorm {
        /// `(x - mean) / sqrt(var + eps)`, before the gamma/beta affine map.
        normalized: Matrix,
        inv_std: Vec<f64>,
        batch_mean: Vec<f64>,
        batch_var: Vec<f64>,
        mode: Mode,
    },
    Relu {
        mask: Vec<bool>,
    },
}

/// Cached intermediates of one forward pass; consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    layers: Vec<LayerTape>,
    batch_size: usize,
    out_dim: usize,
    mode: Mode,
}

impl Tape {
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Normalized (pre-affine) activations of every batch-norm layer, in order.
    pub fn batchnorm_normalized(&self) -> Vec<&Matrix> {
        self.layers
            .iter()
            .filter_map(|lt| match lt {
                LayerTape::BatchNorm { normalized, .. } => Some(normalized),
                _ => None,
            })
            .collect()
    }

    /// ReLU activation masks, in layer order. Used by the gradient checker to
    /// detect finite-difference steps that cross a kink.
    pub fn relu_masks(&self) -> Vec<&[bool]> {
        self.layers
            .iter()
            .filter_map(|lt| match lt {
                LayerTape::Relu { mask } => Some(mask.as_slice()),
                _ => None,
            })
            .collect()
    }
}

/// Gradients for one layer, shaped like its parameters.
#[derive(Debug, Clone)]
pub enum LayerGrads {
    Dense { weights: Matrix, bias: Vec<f64> },
    BatchNorm { gamma: Vec<f64>, beta: Vec<f64> },
    Relu,
}

/// Parameter gradients for a whole [`Mlp`], aligned with its layer list.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

impl MlpGrads {
    /// Gradient tensors in the same order as [`Mlp::param_slices`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerGrads::Dense { weights, bias } => {
                    out.push(weights.data());
                    out.push(bias.as_slice());
                }
                LayerGrads::BatchNorm { gamma, beta } => {
                    out.push(gamma.as_slice());
                    out.push(beta.as_slice());
                }
                LayerGrads::Relu => {}
            }
        }
        out
    }
}

/// Dense multi-layer perceptron with a fixed layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    in_dim: usize,
    out_dim: usize,
}

impl Mlp {
    /// `Dense -> BatchNorm -> ReLU` per hidden size, then a linear output layer.
    pub fn new(in_dim: usize, hidden: &[usize], out_dim: usize, rng: &mut Rng) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 || hidden.contains(&0) {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        let mut layers = Vec::new();
        let mut prev = in_dim;
        for &h in hidden {
            layers.push(Layer::Dense(DenseLayer::init(prev, h, rng)));
            layers.push(Layer::BatchNorm(BatchNormLayer::init(h)));
            layers.push(Layer::Relu);
            prev = h;
        }
        layers.push(Layer::Dense(DenseLayer::init(prev, out_dim, rng)));
        Ok(Mlp {
            layers,
            in_dim,
            out_dim,
        })
    }

    pub(crate) fn from_layers(layers: Vec<Layer>, in_dim: usize, out_dim: usize) -> Self {
        Mlp {
            layers,
            in_dim,
            out_dim,
        }
    }

    /// Build from an explicit layer stack, checking that adjacent dimensions
    /// chain from `in_dim` to `out_dim`.
    pub fn from_layer_stack(layers: Vec<Layer>, in_dim: usize, out_dim: usize) -> Result<Self> {
        let mut current = in_dim;
        for layer in &layers {
            match layer {
                Layer::Dense(d) => {
                    if d.in_dim() != current {
                        return Err(Error::Config(format!(
                            "dense layer expects {}-d input, chain provides {current}-d",
                            d.in_dim()
                        )));
                    }
                    current = d.out_dim();
                }
                Layer::BatchNorm(bn) => {
                    if bn.dim() != current {
                        return Err(Error::Config(format!(
                            "batch norm is {}-d, chain provides {current}-d",
                            bn.dim()
                        )));
                    }
                }
                Layer::Relu => {}
            }
        }
        if current != out_dim {
            return Err(Error::Config(format!(
                "chain ends at {current}-d, expected {out_dim}-d"
            )));
        }
        Ok(Mlp {
            layers,
            in_dim,
            out_dim,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn has_batchnorm(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::BatchNorm(_)))
    }

    /// Pure forward pass. Train mode normalizes with batch statistics and
    /// records them in the tape; it does not touch the running statistics
    /// (see [`update_running_stats`](Self::update_running_stats)).
    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<(Matrix, Tape)> {
        if x.cols() != self.in_dim {
            return Err(Error::Shape(format!(
                "input is {}-d, network expects {}-d",
                x.cols(),
                self.in_dim
            )));
        }
        let batch = x.rows();
        if batch == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if !x.is_finite() {
            return Err(Error::Numerics("non-finite network input".into()));
        }
        if mode == Mode::Train && batch < 2 && self.has_batchnorm() {
            return Err(Error::BatchTooSmall(
                "train-mode batch norm needs a batch of at least 2".into(),
            ));
        }
        let mut current = x.clone();
        let mut tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            match layer {
                Layer::Dense(dense) => {
                    let mut out = current.matmul(&dense.weights);
                    for r in 0..out.rows() {
                        for (o, &b) in out.row_mut(r).iter_mut().zip(&dense.bias) {
                            *o += b;
                        }
                    }
                    tapes.push(LayerTape::Dense { input: current });
                    current = out;
                }
                Layer::BatchNorm(bn) => {
                    let dim = bn.dim();
                    let (mean, var) = match mode {
                        Mode::Train => (current.column_means(), current.column_variances()),
                        Mode::Eval => (bn.running_mean.clone(), bn.running_var.clone()),
                    };
                    let inv_std: Vec<f64> =
                        var.iter().map(|&v| 1.0 / (v + bn.eps).sqrt()).collect();
                    let mut normalized = current;
                    for r in 0..normalized.rows() {
                        let row = normalized.row_mut(r);
                        for ((v, &mu), &is) in row.iter_mut().zip(&mean).zip(&inv_std) {
                            *v = (*v - mu) * is;
                        }
                    }
                    let mut out = Matrix::zeros(batch, dim);
                    for r in 0..batch {
                        let src = normalized.row(r);
                        let dst = out.row_mut(r);
                        for (((d, &s), &g), &b) in
                            dst.iter_mut().zip(src).zip(&bn.gamma).zip(&bn.beta)
                        {
                            *d = s * g + b;
                        }
                    }
                    tapes.push(LayerTape::BatchNorm {
                        normalized,
                        inv_std,
                        batch_mean: mean,
                        batch_var: var,
                        mode,
                    });
                    current = out;
                }
                Layer::Relu => {
                    let mask: Vec<bool> = current.data().iter().map(|&v| v > 0.0).collect();
                    for (v, &keep) in current.data_mut().iter_mut().zip(&mask) {
                        if !keep {
                            *v = 0.0;
                        }
                    }
                    tapes.push(LayerTape::Relu { mask });
                }
            }
        }
        Ok((
            current,
            Tape {
                layers: tapes,
                batch_size: batch,
                out_dim: self.out_dim,
                mode,
            },
        ))
    }

    /// Fold the batch statistics recorded on a train-mode tape into the
    /// running statistics: `running = (1 - momentum) * running + momentum * batch`.
    pub fn update_running_stats(&mut self, tape: &Tape) -> Result<()> {
        if tape.mode != Mode::Train {
            return Ok(());
        }
        let mut tape_iter = tape.layers.iter();
        for layer in &mut self.layers {
            let lt = tape_iter
                .next()
                .ok_or_else(|| Error::Tape("tape shorter than layer list".into()))?;
            if let Layer::BatchNorm(bn) = layer {
                match lt {
                    LayerTape::BatchNorm {
                        batch_mean,
                        batch_var,
                        ..
                    } => {
                        let m = bn.momentum;
                        for (r, &b) in bn.running_mean.iter_mut().zip(batch_mean) {
                            *r = (1.0 - m) * *r + m * b;
                        }
                        for (r, &b) in bn.running_var.iter_mut().zip(batch_var) {
                            *r = (1.0 - m) * *r + m * b;
                        }
                    }
                    _ => return Err(Error::Tape("tape does not match layer kinds".into())),
                }
            }
        }
        Ok(())
    }

    /// Forward pass that also updates running statistics in Train mode.
    pub fn forward_mut(&mut self, x: &Matrix, mode: Mode) -> Result<(Matrix, Tape)> {
        let (y, tape) = self.forward(x, mode)?;
        if mode == Mode::Train {
            self.update_running_stats(&tape)?;
        }
        Ok((y, tape))
    }

    /// Reverse-mode gradients of the forward pass recorded on `tape`.
    /// Returns the gradient with respect to the input and per-parameter grads.
    pub fn backward(&self, tape: Tape, grad_y: &Matrix) -> Result<(Matrix, MlpGrads)> {
        if tape.layers.len() != self.layers.len() {
            return Err(Error::Tape(format!(
                "tape has {} entries for {} layers",
                tape.layers.len(),
                self.layers.len()
            )));
        }
        if grad_y.shape() != (tape.batch_size, tape.out_dim) {
            return Err(Error::Shape(format!(
                "grad_y is {:?}, expected {:?}",
                grad_y.shape(),
                (tape.batch_size, tape.out_dim)
            )));
        }
        let batch = tape.batch_size;
        let mut grad = grad_y.clone();
        let mut layer_grads: Vec<LayerGrads> = Vec::with_capacity(self.layers.len());
        for (layer, lt) in self.layers.iter().zip(tape.layers).rev() {
            match (layer, lt) {
                (Layer::Dense(dense), LayerTape::Dense { input }) => {
                    let grad_w = input.matmul_transpose_self(&grad);
                    let mut grad_b = vec![0.0; dense.out_dim()];
                    for r in 0..grad.rows() {
                        for (b, &g) in grad_b.iter_mut().zip(grad.row(r)) {
                            *b += g;
                        }
                    }
                    let grad_x = grad.matmul_transpose_other(&dense.weights);
                    layer_grads.push(LayerGrads::Dense {
                        weights: grad_w,
                        bias: grad_b,
                    });
                    grad = grad_x;
                }
                (
                    Layer::BatchNorm(bn),
                    LayerTape::BatchNorm {
                        normalized,
                        inv_std,
                        mode,
                        ..
                    },
                ) => {
                    let dim = bn.dim();
                    let mut grad_gamma = vec![0.0; dim];
                    let mut grad_beta = vec![0.0; dim];
                    for r in 0..batch {
                        let g_row = grad.row(r);
                        let n_row = normalized.row(r);
                        for ((j, &g), &nv) in g_row.iter().enumerate().zip(n_row) {
                            grad_gamma[j] += g * nv;
                            grad_beta[j] += g;
                        }
                    }
                    match mode {
                        Mode::Eval => {
                            // Running stats are constants: a plain affine map.
                            for r in 0..batch {
                                let row = grad.row_mut(r);
                                for ((g, &gam), &is) in
                                    row.iter_mut().zip(&bn.gamma).zip(&inv_std)
                                {
                                    *g *= gam * is;
                                }
                            }
                        }
                        Mode::Train => {
                            // Batch statistics depend on every row:
                            // dx = inv_std/B * (B*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
                            // with dxhat = grad * gamma.
                            let mut sum_dxhat = vec![0.0; dim];
                            let mut sum_dxhat_xhat = vec![0.0; dim];
                            for r in 0..batch {
                                let g_row = grad.row(r);
                                let n_row = normalized.row(r);
                                for (j, (&g, &nv)) in g_row.iter().zip(n_row).enumerate() {
                                    let dxhat = g * bn.gamma[j];
                                    sum_dxhat[j] += dxhat;
                                    sum_dxhat_xhat[j] += dxhat * nv;
                                }
                            }
                            let inv_b = 1.0 / batch as f64;
                            for r in 0..batch {
                                for j in 0..dim {
                                    let dxhat = grad.get(r, j) * bn.gamma[j];
                                    let nv = normalized.get(r, j);
                                    let dx = inv_std[j]
                                        * inv_b
                                        * (batch as f64 * dxhat
                                            - sum_dxhat[j]
                                            - nv * sum_dxhat_xhat[j]);
                                    grad.set(r, j, dx);
                                }
                            }
                        }
                    }
                    layer_grads.push(LayerGrads::BatchNorm {
                        gamma: grad_gamma,
                        beta: grad_beta,
                    });
                }
                (Layer::Relu, LayerTape::Relu { mask }) => {
                    for (g, &keep) in grad.data_mut().iter_mut().zip(&mask) {
                        if !keep {
                            *g = 0.0;
                        }
                    }
                    layer_grads.push(LayerGrads::Relu);
                }
                (layer, _) => {
                    return Err(Error::Tape(format!(
                        "tape entry does not match {} layer",
                        layer.kind_name()
                    )));
                }
            }
        }
        layer_grads.reverse();
        Ok((grad, MlpGrads { layers: layer_grads }))
    }

    /// Trainable parameter tensors, in a fixed order (per layer: dense
    /// weights then bias; batch-norm gamma then beta).
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.data());
                    out.push(d.bias.as_slice());
                }
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.as_slice());
                    out.push(bn.beta.as_slice());
                }
                Layer::Relu => {}
            }
        }
        out
    }

    /// Mutable view of the same tensors as [`param_slices`](Self::param_slices).
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.push(d.weights.data_mut());
                    out.push(d.bias.as_mut_slice());
                }
                Layer::BatchNorm(bn) => {
                    out.push(bn.gamma.as_mut_slice());
                    out.push(bn.beta.as_mut_slice());
                }
                Layer::Relu => {}
            }
        }
        out
    }

    /// Human-readable name per parameter tensor, aligned with `param_slices`.
    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Dense(_) => {
                    out.push(format!("layer{i}.dense.weights"));
                    out.push(format!("layer{i}.dense.bias"));
                }
                Layer::BatchNorm(_) => {
                    out.push(format!("layer{i}.batchnorm.gamma"));
                    out.push(format!("layer{i}.batchnorm.beta"));
                }
                Layer::Relu => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }
}
