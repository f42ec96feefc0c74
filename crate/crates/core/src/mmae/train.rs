//! Joint training loop over all six networks.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::data::{batch_iter, epoch_seed, TripletDataset};
use crate::error::{Error, Result};
use crate::nn::{AdamHyper, AdamState, Mode};

use super::{LossBreakdown, MmaeModel};

/// One epoch's mean loss breakdown plus bookkeeping.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    /// Wall-clock seconds; informational only and never written to artifacts.
    pub wall_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub seed: u64,
    pub config_summary: String,
}

/// Training abort carrying the last epoch's good model so callers can
/// checkpoint it.
#[derive(Debug)]
pub struct TrainError {
    pub error: Error,
    pub last_good: Box<MmaeModel>,
    pub history: TrainHistory,
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "training aborted: {}", self.error)
    }
}

impl From<TrainError> for Error {
    fn from(e: TrainError) -> Self {
        e.error
    }
}

/// Train for `config.epochs` epochs: per batch, forward in Train mode,
/// joint backward through all six networks (decoder gradients flow through
/// the fused latent into every encoder), one Adam step over all parameters,
/// then fold batch statistics into the running statistics.
///
/// A non-finite loss or gradient aborts with the model as of the end of the
/// previous epoch.
pub fn train(
    model: MmaeModel,
    data: &TripletDataset,
) -> std::result::Result<(MmaeModel, TrainHistory), TrainError> {
    let config = model.config().clone();
    let mut history = TrainHistory {
        epochs: Vec::with_capacity(config.epochs),
        seed: config.seed,
        config_summary: config.describe(),
    };
    let fail = |error: Error, last_good: MmaeModel, history: TrainHistory| TrainError {
        error,
        last_good: Box::new(last_good),
        history,
    };
    if config.epochs == 0 {
        let error = Error::Config("epochs must be >= 1".into());
        return Err(fail(error, model, history));
    }
    if data.dims() != config.input_dims {
        let error = Error::Shape(format!(
            "dataset dims {:?} do not match config {:?}",
            data.dims(),
            config.input_dims
        ));
        return Err(fail(error, model, history));
    }

    let mut model = model;
    let shapes: Vec<usize> = model.param_slices().iter().map(|s| s.len()).collect();
    let mut optimizer = AdamState::new(&shapes, AdamHyper::with_lr(config.lr));
    let mut last_good = model.clone();

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let batches = match batch_iter(data, config.batch_size, true, epoch_seed(config.seed, epoch)) {
            Ok(mut batches) => {
                // A train-mode batch of one row cannot be batch-normalized;
                // fold a trailing singleton into the previous batch.
                if batches.len() >= 2 && batches.last().map(|b| b.indices.len()) == Some(1) {
                    let last = batches.pop().expect("checked above");
                    let prev = batches.last_mut().expect("len >= 2");
                    prev.image = prev.image.vconcat(&last.image).expect("same dims");
                    prev.audio = prev.audio.vconcat(&last.audio).expect("same dims");
                    prev.text = prev.text.vconcat(&last.text).expect("same dims");
                    prev.labels.extend(last.labels);
                    prev.indices.extend(last.indices);
                }
                batches
            }
            Err(error) => return Err(fail(error, last_good, history)),
        };
        let mut sums = LossBreakdown {
            rec_image: 0.0,
            rec_audio: 0.0,
            rec_text: 0.0,
            align: 0.0,
            total: 0.0,
        };
        let mut rows_seen = 0usize;
        for batch in &batches {
            let step = (|| -> Result<LossBreakdown> {
                let trace = model.forward(batch, Mode::Train)?;
                model.apply_running_updates(&trace)?;
                let (loss, grads) = model.loss_and_backward(trace, batch)?;
                if !loss.is_finite() {
                    return Err(Error::Numerics(format!(
                        "non-finite loss at epoch {epoch}"
                    )));
                }
                let grad_slices = grads.slices();
                let mut params = model.param_slices_mut();
                optimizer.step(&mut params, &grad_slices)?;
                Ok(loss)
            })();
            match step {
                Ok(loss) => {
                    let weight = batch.indices.len() as f64;
                    sums.rec_image += loss.rec_image * weight;
                    sums.rec_audio += loss.rec_audio * weight;
                    sums.rec_text += loss.rec_text * weight;
                    sums.align += loss.align * weight;
                    sums.total += loss.total * weight;
                    rows_seen += batch.indices.len();
                }
                Err(error) => return Err(fail(error, last_good, history)),
            }
        }
        let inv = 1.0 / rows_seen as f64;
        history.epochs.push(EpochRecord {
            epoch,
            loss: LossBreakdown {
                rec_image: sums.rec_image * inv,
                rec_audio: sums.rec_audio * inv,
                rec_text: sums.rec_text * inv,
                align: sums.align * inv,
                total: sums.total * inv,
            },
            wall_secs: started.elapsed().as_secs_f64(),
        });
        last_good = model.clone();
    }
    Ok((model, history))
}

/// Write the per-epoch loss table as CSV with `# key = value` metadata lines.
/// Wall-clock times are deliberately excluded so reruns are byte-identical.
pub fn write_history_csv(path: &Path, history: &TrainHistory, config_digest: u64) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# seed = {}\n", history.seed));
    out.push_str(&format!("# config = {config_digest:016x}\n"));
    out.push_str("epoch,rec_image,rec_audio,rec_text,align,total\n");
    for record in &history.epochs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            record.epoch,
            record.loss.rec_image,
            record.loss.rec_audio,
            record.loss.rec_text,
            record.loss.align,
            record.loss.total,
        ));
    }
    fs::write(path, out)?;
    Ok(())
}
