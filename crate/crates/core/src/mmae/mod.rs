//! The multimodal autoencoder: three encoder/decoder pairs joined at one
//! shared latent space and trained by joint reconstruction.
//!
//! Each modality `m` has an encoder `E_m` mapping its features to the latent
//! space and a decoder `D_m` mapping latents back to feature space. A fusion
//! rule (by default the arithmetic mean) combines the three encoder outputs
//! into one shared latent, and every decoder reconstructs its modality from
//! that fused latent — this is what forces cross-modal information into a
//! single latent structure. The loss is a weighted sum of per-modality
//! reconstruction MSEs plus an optional alignment penalty on encoder
//! disagreement.

pub mod checkpoint;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{train, write_history_csv, EpochRecord, TrainError, TrainHistory};

use crate::data::{Modality, TripletBatch, TripletDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{mse_loss, Mlp, MlpGrads, Mode, Tape};
use crate::rng::Rng;

/// How the three encoder outputs combine into the shared latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionRule {
    /// Elementwise arithmetic mean of the three encoder outputs.
    Mean,
    /// Use one encoder's output verbatim (reduces the model to a unimodal
    /// autoencoder when the loss weights select the same modality).
    SingleModality(Modality),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmaeConfig {
    pub latent_dim: usize,
    /// Hidden layer widths shared by every encoder; the latent projection
    /// layer is appended after these. Decoders mirror the stack in reverse.
    pub hidden: Vec<usize>,
    /// Input dimensions per modality (image, audio, text).
    pub input_dims: (usize, usize, usize),
    /// Reconstruction loss weights (image, audio, text).
    pub loss_weights: (f64, f64, f64),
    pub fusion: FusionRule,
    /// Weight of the alignment penalty on pairwise encoder disagreement.
    pub alignment_weight: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MmaeConfig {
    fn default() -> Self {
        MmaeConfig {
            latent_dim: 128,
            hidden: vec![128, 128],
            input_dims: (50, 1024, 768),
            loss_weights: (1.0, 1.0, 1.0),
            fusion: FusionRule::Mean,
            alignment_weight: 0.0,
            lr: 1e-3,
            batch_size: 128,
            epochs: 100,
            seed: 42,
        }
    }
}

impl MmaeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::Config("latent_dim must be >= 1".into()));
        }
        let (di, da, dt) = self.input_dims;
        if di == 0 || da == 0 || dt == 0 {
            return Err(Error::Config("input dims must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden sizes must be positive".into()));
        }
        let (wi, wa, wt) = self.loss_weights;
        if [wi, wa, wt].iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(
                "loss weights must be finite and nonnegative".into(),
            ));
        }
        if wi == 0.0 && wa == 0.0 && wt == 0.0 {
            return Err(Error::Config("loss weights cannot all be zero".into()));
        }
        if !self.alignment_weight.is_finite() || self.alignment_weight < 0.0 {
            return Err(Error::Config("alignment_weight must be finite and >= 0".into()));
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::Config("lr must be finite and >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self, modality: Modality) -> usize {
        match modality {
            Modality::Image => self.input_dims.0,
            Modality::Audio => self.input_dims.1,
            Modality::Text => self.input_dims.2,
        }
    }

    pub fn loss_weight(&self, modality: Modality) -> f64 {
        match modality {
            Modality::Image => self.loss_weights.0,
            Modality::Audio => self.loss_weights.1,
            Modality::Text => self.loss_weights.2,
        }
    }

    /// Canonical one-line rendering, hashed into output file metadata.
    pub fn describe(&self) -> String {
        let fusion = match self.fusion {
            FusionRule::Mean => "mean".to_string(),
            FusionRule::SingleModality(m) => format!("single:{m}"),
        };
        format!(
            "latent={} hidden={:?} dims={:?} weights={:?} fusion={fusion} align={} lr={} batch={} epochs={} seed={}",
            self.latent_dim,
            self.hidden,
            self.input_dims,
            self.loss_weights,
            self.alignment_weight,
            self.lr,
            self.batch_size,
            self.epochs,
            self.seed,
        )
    }
}

/// Three encoders and three decoders sharing one latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct MmaeModel {
    encoders: [Mlp; 3],
    decoders: [Mlp; 3],
    config: MmaeConfig,
}

const INIT_STREAM: u64 = 0x4d4d_4145;

/// Deterministically initialize all six networks from `cfg.seed`.
/// Decoder hidden stacks mirror the encoder's in reverse order.
pub fn mmae_init(cfg: MmaeConfig) -> Result<MmaeModel> {
    cfg.validate()?;
    let mut rng = Rng::derive(cfg.seed, INIT_STREAM);
    let mut mirrored: Vec<usize> = cfg.hidden.clone();
    mirrored.reverse();
    let build_encoder = |dim: usize, rng: &mut Rng| -> Result<Mlp> {
        Mlp::new(dim, &cfg.hidden, cfg.latent_dim, rng)
    };
    let build_decoder = |dim: usize, rng: &mut Rng, mirrored: &[usize]| -> Result<Mlp> {
        Mlp::new(cfg.latent_dim, mirrored, dim, rng)
    };
    let encoders = [
        build_encoder(cfg.input_dims.0, &mut rng)?,
        build_encoder(cfg.input_dims.1, &mut rng)?,
        build_encoder(cfg.input_dims.2, &mut rng)?,
    ];
    let decoders = [
        build_decoder(cfg.input_dims.0, &mut rng, &mirrored)?,
        build_decoder(cfg.input_dims.1, &mut rng, &mirrored)?,
        build_decoder(cfg.input_dims.2, &mut rng, &mirrored)?,
    ];
    Ok(MmaeModel {
        encoders,
        decoders,
        config: cfg,
    })
}

fn modality_index(m: Modality) -> usize {
    match m {
        Modality::Image => 0,
        Modality::Audio => 1,
        Modality::Text => 2,
    }
}

impl MmaeModel {
    pub fn config(&self) -> &MmaeConfig {
        &self.config
    }

    pub fn encoder(&self, m: Modality) -> &Mlp {
        &self.encoders[modality_index(m)]
    }

    pub fn decoder(&self, m: Modality) -> &Mlp {
        &self.decoders[modality_index(m)]
    }

    pub(crate) fn from_parts(
        encoders: [Mlp; 3],
        decoders: [Mlp; 3],
        config: MmaeConfig,
    ) -> Result<Self> {
        config.validate()?;
        for (i, m) in Modality::ALL.iter().enumerate() {
            if encoders[i].in_dim() != config.input_dim(*m)
                || encoders[i].out_dim() != config.latent_dim
                || decoders[i].in_dim() != config.latent_dim
                || decoders[i].out_dim() != config.input_dim(*m)
            {
                return Err(Error::Config(format!(
                    "{m} encoder/decoder dimensions do not match the config"
                )));
            }
        }
        Ok(MmaeModel {
            encoders,
            decoders,
            config,
        })
    }

    /// Parameter tensors of all six networks (encoders then decoders).
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for mlp in self.encoders.iter().chain(self.decoders.iter()) {
            out.extend(mlp.param_slices());
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for mlp in self.encoders.iter_mut().chain(self.decoders.iter_mut()) {
            out.extend(mlp.param_slices_mut());
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (mlp, prefix) in self
            .encoders
            .iter()
            .chain(self.decoders.iter())
            .zip(["enc_image", "enc_audio", "enc_text", "dec_image", "dec_audio", "dec_text"])
        {
            out.extend(mlp.param_names().into_iter().map(|n| format!("{prefix}.{n}")));
        }
        out
    }

    /// Forward the whole model on one batch. Pure; running statistics are
    /// updated separately by the trainer via [`apply_running_updates`](Self::apply_running_updates).
    pub fn forward(&self, batch: &TripletBatch, mode: Mode) -> Result<ForwardTrace> {
        let inputs = [&batch.image, &batch.audio, &batch.text];
        for (m, input) in Modality::ALL.iter().zip(&inputs) {
            if input.cols() != self.config.input_dim(*m) {
                return Err(Error::Shape(format!(
                    "{m} batch is {}-d, config expects {}-d",
                    input.cols(),
                    self.config.input_dim(*m)
                )));
            }
        }
        let mut z: Vec<Matrix> = Vec::with_capacity(3);
        let mut enc_tapes: Vec<Tape> = Vec::with_capacity(3);
        for (encoder, input) in self.encoders.iter().zip(&inputs) {
            let (out, tape) = encoder.forward(input, mode)?;
            z.push(out);
            enc_tapes.push(tape);
        }
        let z_fused = fuse(&z, self.config.fusion);
        let mut recon: Vec<Matrix> = Vec::with_capacity(3);
        let mut dec_tapes: Vec<Tape> = Vec::with_capacity(3);
        for decoder in &self.decoders {
            let (out, tape) = decoder.forward(&z_fused, mode)?;
            recon.push(out);
            dec_tapes.push(tape);
        }
        let into3 = |mut v: Vec<Matrix>| -> [Matrix; 3] {
            let c = v.pop().unwrap();
            let b = v.pop().unwrap();
            let a = v.pop().unwrap();
            [a, b, c]
        };
        let tapes3 = |mut v: Vec<Tape>| -> [Tape; 3] {
            let c = v.pop().unwrap();
            let b = v.pop().unwrap();
            let a = v.pop().unwrap();
            [a, b, c]
        };
        Ok(ForwardTrace {
            z: into3(z),
            z_fused,
            recon: into3(recon),
            enc_tapes: tapes3(enc_tapes),
            dec_tapes: tapes3(dec_tapes),
        })
    }

    /// Fold a train-mode trace's batch statistics into every network's
    /// running statistics.
    pub fn apply_running_updates(&mut self, trace: &ForwardTrace) -> Result<()> {
        for (enc, tape) in self.encoders.iter_mut().zip(&trace.enc_tapes) {
            enc.update_running_stats(tape)?;
        }
        for (dec, tape) in self.decoders.iter_mut().zip(&trace.dec_tapes) {
            dec.update_running_stats(tape)?;
        }
        Ok(())
    }

    /// Loss breakdown plus gradients for all six networks. Consumes the trace.
    pub fn loss_and_backward(
        &self,
        trace: ForwardTrace,
        batch: &TripletBatch,
    ) -> Result<(LossBreakdown, MmaeGrads)> {
        let ForwardTrace {
            z,
            z_fused,
            recon,
            enc_tapes,
            dec_tapes,
        } = trace;
        let targets = [&batch.image, &batch.audio, &batch.text];
        let weights = [
            self.config.loss_weights.0,
            self.config.loss_weights.1,
            self.config.loss_weights.2,
        ];
        let batch_rows = z_fused.rows();
        let latent_dim = z_fused.cols();

        let mut rec = [0.0f64; 3];
        let mut grad_fused = Matrix::zeros(batch_rows, latent_dim);
        let mut dec_grads: Vec<MlpGrads> = Vec::with_capacity(3);
        for (i, (tape, target)) in dec_tapes.into_iter().zip(targets).enumerate() {
            let (loss_m, mut grad_recon) = mse_loss(&recon[i], target)?;
            rec[i] = loss_m;
            grad_recon.scale(weights[i]);
            let (grad_z, grads) = self.decoders[i].backward(tape, &grad_recon)?;
            grad_fused.add_assign(&grad_z);
            dec_grads.push(grads);
        }

        // Gradient of the fused latent with respect to each encoder output.
        let mut grad_z: Vec<Matrix> = match self.config.fusion {
            FusionRule::Mean => {
                let mut scaled = grad_fused.clone();
                scaled.scale(1.0 / 3.0);
                vec![scaled.clone(), scaled.clone(), scaled]
            }
            FusionRule::SingleModality(m) => {
                let idx = modality_index(m);
                let zero = Matrix::zeros(batch_rows, latent_dim);
                let mut v = vec![zero.clone(), zero.clone(), zero];
                v[idx] = grad_fused.clone();
                v
            }
        };

        // Alignment penalty: mean over the three pairs and the batch of the
        // squared distance between encoder outputs.
        let lambda = self.config.alignment_weight;
        let mut align = 0.0;
        if lambda > 0.0 {
            let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
            let norm = 1.0 / (3.0 * batch_rows as f64);
            for &(a, b) in &pairs {
                for r in 0..batch_rows {
                    align += Matrix::row_distance_sq(&z[a], r, &z[b], r);
                }
            }
            align *= norm;
            // d align / d z_a = 2/(3B) * sum over pairs containing a of (z_a - z_b)
            for &(a, b) in &pairs {
                for r in 0..batch_rows {
                    for c in 0..latent_dim {
                        let diff = z[a].get(r, c) - z[b].get(r, c);
                        let delta = 2.0 * norm * lambda * diff;
                        let va = grad_z[a].get(r, c) + delta;
                        grad_z[a].set(r, c, va);
                        let vb = grad_z[b].get(r, c) - delta;
                        grad_z[b].set(r, c, vb);
                    }
                }
            }
        }

        let mut enc_grads: Vec<MlpGrads> = Vec::with_capacity(3);
        for (i, tape) in enc_tapes.into_iter().enumerate() {
            let (_, grads) = self.encoders[i].backward(tape, &grad_z[i])?;
            enc_grads.push(grads);
        }

        let total = weights[0] * rec[0] + weights[1] * rec[1] + weights[2] * rec[2]
            + lambda * align;
        let breakdown = LossBreakdown {
            rec_image: rec[0],
            rec_audio: rec[1],
            rec_text: rec[2],
            align,
            total,
        };
        let into3 = |mut v: Vec<MlpGrads>| -> [MlpGrads; 3] {
            let c = v.pop().unwrap();
            let b = v.pop().unwrap();
            let a = v.pop().unwrap();
            [a, b, c]
        };
        Ok((
            breakdown,
            MmaeGrads {
                enc: into3(enc_grads),
                dec: into3(dec_grads),
            },
        ))
    }

    /// Loss breakdown only (no gradients).
    pub fn loss(&self, trace: &ForwardTrace, batch: &TripletBatch) -> Result<LossBreakdown> {
        let targets = [&batch.image, &batch.audio, &batch.text];
        let weights = [
            self.config.loss_weights.0,
            self.config.loss_weights.1,
            self.config.loss_weights.2,
        ];
        let mut rec = [0.0f64; 3];
        for i in 0..3 {
            rec[i] = mse_loss(&trace.recon[i], targets[i])?.0;
        }
        let lambda = self.config.alignment_weight;
        let mut align = 0.0;
        if lambda > 0.0 {
            let batch_rows = trace.z_fused.rows();
            let norm = 1.0 / (3.0 * batch_rows as f64);
            for &(a, b) in &[(0usize, 1usize), (0, 2), (1, 2)] {
                for r in 0..batch_rows {
                    align += Matrix::row_distance_sq(&trace.z[a], r, &trace.z[b], r);
                }
            }
            align *= norm;
        }
        let total = weights[0] * rec[0] + weights[1] * rec[1] + weights[2] * rec[2]
            + lambda * align;
        Ok(LossBreakdown {
            rec_image: rec[0],
            rec_audio: rec[1],
            rec_text: rec[2],
            align,
            total,
        })
    }
}

/// Combine encoder outputs into the shared latent.
fn fuse(z: &[Matrix], rule: FusionRule) -> Matrix {
    match rule {
        FusionRule::Mean => {
            let mut fused = z[0].clone();
            fused.add_assign(&z[1]);
            fused.add_assign(&z[2]);
            fused.scale(1.0 / 3.0);
            fused
        }
        FusionRule::SingleModality(m) => z[modality_index(m)].clone(),
    }
}

/// Everything one forward pass produced, including the tapes backward needs.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Per-modality encoder outputs (image, audio, text).
    pub z: [Matrix; 3],
    pub z_fused: Matrix,
    /// Per-modality reconstructions from the fused latent.
    pub recon: [Matrix; 3],
    enc_tapes: [Tape; 3],
    dec_tapes: [Tape; 3],
}

/// Per-modality reconstruction terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub rec_image: f64,
    pub rec_audio: f64,
    pub rec_text: f64,
    pub align: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.rec_image.is_finite()
            && self.rec_audio.is_finite()
            && self.rec_text.is_finite()
            && self.align.is_finite()
            && self.total.is_finite()
    }
}

/// Gradients for all six networks.
#[derive(Debug, Clone)]
pub struct MmaeGrads {
    pub enc: [MlpGrads; 3],
    pub dec: [MlpGrads; 3],
}

impl MmaeGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for grads in self.enc.iter().chain(self.dec.iter()) {
            out.extend(grads.slices());
        }
        out
    }
}

/// Which latent to extract for downstream evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedSource {
    Fused,
    Image,
    Audio,
    Text,
}

impl EmbedSource {
    pub fn name(&self) -> &'static str {
        match self {
            EmbedSource::Fused => "fused",
            EmbedSource::Image => "image",
            EmbedSource::Audio => "audio",
            EmbedSource::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fused" => Ok(EmbedSource::Fused),
            "image" => Ok(EmbedSource::Image),
            "audio" => Ok(EmbedSource::Audio),
            "text" => Ok(EmbedSource::Text),
            other => Err(Error::Config(format!("unknown embed source {other:?}"))),
        }
    }
}

/// Extract latent embeddings for a whole dataset in Eval mode (running batch
/// norm statistics). Rows come back in dataset order; computed in fixed-size
/// blocks so memory stays bounded.
pub fn embed(model: &MmaeModel, data: &TripletDataset, source: EmbedSource) -> Result<Matrix> {
    const BLOCK: usize = 512;
    let n = data.n_samples();
    let latent = model.config.latent_dim;
    let mut out = Matrix::zeros(n, latent);
    let mut start = 0;
    while start < n {
        let end = (start + BLOCK).min(n);
        let indices: Vec<usize> = (start..end).collect();
        let batch = TripletBatch {
            image: data.image().values().select_rows(&indices),
            audio: data.audio().values().select_rows(&indices),
            text: data.text().values().select_rows(&indices),
            labels: indices.iter().map(|&i| data.labels()[i]).collect(),
            indices: indices.clone(),
        };
        let block_out = match source {
            EmbedSource::Fused => {
                let trace = model.forward(&batch, Mode::Eval)?;
                trace.z_fused
            }
            EmbedSource::Image | EmbedSource::Audio | EmbedSource::Text => {
                let m = match source {
                    EmbedSource::Image => Modality::Image,
                    EmbedSource::Audio => Modality::Audio,
                    EmbedSource::Text => Modality::Text,
                    EmbedSource::Fused => unreachable!(),
                };
                let input = match m {
                    Modality::Image => &batch.image,
                    Modality::Audio => &batch.audio,
                    Modality::Text => &batch.text,
                };
                let (z, _) = model.encoder(m).forward(input, Mode::Eval)?;
                z
            }
        };
        for (local, row) in (start..end).enumerate() {
            out.row_mut(row).copy_from_slice(block_out.row(local));
        }
        start = end;
    }
    Ok(out)
}

/// Finite-difference check of the total loss through the full six-network
/// composition; the joint analogue of [`crate::nn::grad_check`].
pub fn mmae_grad_check(
    model: &MmaeModel,
    batch: &TripletBatch,
    h: f64,
    tolerance: f64,
) -> Result<crate::nn::GradCheckReport> {
    if !(1e-6..=1e-4).contains(&h) {
        return Err(Error::Config(format!(
            "finite-difference step {h} outside [1e-6, 1e-4]"
        )));
    }
    let trace = model.forward(batch, Mode::Train)?;
    let (_, grads) = model.loss_and_backward(trace, batch)?;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let names = model.param_names();

    let mut work = model.clone();
    let mut report = crate::nn::GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        n_checked: 0,
        n_skipped: 0,
        tolerance,
    };
    let loss_and_masks = |model: &MmaeModel| -> Result<(f64, Vec<Vec<bool>>)> {
        let trace = model.forward(batch, Mode::Train)?;
        let mut masks: Vec<Vec<bool>> = Vec::new();
        for tape in trace.enc_tapes.iter().chain(trace.dec_tapes.iter()) {
            masks.extend(tape.relu_masks().iter().map(|m| m.to_vec()));
        }
        let loss = model.loss(&trace, batch)?;
        Ok((loss.total, masks))
    };
    for (tensor, tensor_grads) in analytic.iter().enumerate() {
        for (offset, &a) in tensor_grads.iter().enumerate() {
            let original = work.param_slices()[tensor][offset];
            work.param_slices_mut()[tensor][offset] = original + h;
            let (loss_plus, masks_plus) = loss_and_masks(&work)?;
            work.param_slices_mut()[tensor][offset] = original - h;
            let (loss_minus, masks_minus) = loss_and_masks(&work)?;
            work.param_slices_mut()[tensor][offset] = original;
            if masks_plus != masks_minus {
                report.n_skipped += 1;
                continue;
            }
            let fd = (loss_plus - loss_minus) / (2.0 * h);
            let diff = (a - fd).abs();
            let rel = if diff <= 1e-8 {
                0.0
            } else {
                diff / a.abs().max(fd.abs()).max(1e-10)
            };
            report.n_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = format!("{}[{offset}]", names[tensor]);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
