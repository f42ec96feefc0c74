//! `train`: standardize, train the model, write checkpoint + history + stats.

use std::path::PathBuf;

use clap::Args;

use trilatent::data::{manifest, DatasetStats, Modality};
use trilatent::mmae::{mmae_init, save_checkpoint, train, write_history_csv, FusionRule, MmaeConfig};
use trilatent::{Error, Result};

use crate::config::{parse_list, parse_triple, ConfigFile};
use crate::digest::{config_digest, record_digests};
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, require_path};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training-split dataset manifest.
    #[arg(long, value_name = "MANIFEST")]
    pub data: Option<PathBuf>,
    /// Output directory (model.ckpt, history.csv, stats.bin).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Latent dimensionality.
    #[arg(long)]
    pub latent: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Reconstruction loss weights as image,audio,text.
    #[arg(long)]
    pub weights: Option<String>,
    /// Fusion rule: mean, image, audio, or text.
    #[arg(long)]
    pub fusion: Option<String>,
    /// Alignment penalty weight.
    #[arg(long)]
    pub align_weight: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn parse_fusion(raw: &str) -> Result<FusionRule> {
    match raw {
        "mean" => Ok(FusionRule::Mean),
        "image" | "audio" | "text" => Ok(FusionRule::SingleModality(Modality::parse(raw)?)),
        other => Err(Error::Config(format!(
            "fusion must be mean, image, audio, or text; got {other:?}"
        ))),
    }
}

pub fn resolve_config(args: &TrainArgs, config: &ConfigFile) -> Result<(PathBuf, PathBuf, MmaeConfig)> {
    let data = require_path(&args.data, config, "data")?;
    let out = require_path(&args.out, config, "out")?;
    let hidden_raw = args
        .hidden
        .clone()
        .or_else(|| config.raw("hidden").map(str::to_string))
        .unwrap_or_else(|| "128,128".to_string());
    let weights_raw = args
        .weights
        .clone()
        .or_else(|| config.raw("weights").map(str::to_string))
        .unwrap_or_else(|| "1,1,1".to_string());
    let fusion_raw = args
        .fusion
        .clone()
        .or_else(|| config.raw("fusion").map(str::to_string))
        .unwrap_or_else(|| "mean".to_string());
    let cfg = MmaeConfig {
        latent_dim: config.resolve(args.latent, "latent", 128)?,
        hidden: parse_list(&hidden_raw, "hidden")?,
        input_dims: (0, 0, 0), // filled from the dataset below
        loss_weights: parse_triple(&weights_raw, "weights")?,
        fusion: parse_fusion(&fusion_raw)?,
        alignment_weight: config.resolve(args.align_weight, "align-weight", 0.0)?,
        lr: config.resolve(args.lr, "lr", 1e-3)?,
        batch_size: config.resolve(args.batch, "batch", 128)?,
        epochs: config.resolve(args.epochs, "epochs", 100)?,
        seed: config.resolve(args.seed, "seed", 42)?,
    };
    Ok((data, out, cfg))
}

pub fn run(args: &TrainArgs, config: &ConfigFile) -> CmdResult {
    let (data_path, out, mut cfg) = resolve_config(args, config).validation()?;
    ensure_out_dir(&out).validation()?;

    let raw = manifest::load_dataset(&data_path, None).stage()?;
    cfg.input_dims = raw.dims();
    cfg.validate().validation()?;
    let stats = DatasetStats::fit(&raw).stage()?;
    let standardized = stats.apply(&raw).stage()?;
    manifest::save_stats(&stats, &out.join("stats.bin")).stage()?;

    let model = mmae_init(cfg.clone()).stage()?;
    let digest = config_digest(&cfg.describe());
    match train(model, &standardized) {
        Ok((model, history)) => {
            save_checkpoint(&model, &out.join("model.ckpt")).stage()?;
            write_history_csv(&out.join("history.csv"), &history, digest).stage()?;
            record_digests(
                &out,
                &["model.ckpt".into(), "history.csv".into(), "stats.bin".into()],
            )
            .stage()?;
            let first = history.epochs.first().map(|r| r.loss.total).unwrap_or(0.0);
            let last = history.epochs.last().map(|r| r.loss.total).unwrap_or(0.0);
            println!(
                "train: {} epochs on {} rows; mean total loss {first:.6} (epoch 1) -> {last:.6} (final)",
                cfg.epochs,
                standardized.n_samples(),
            );
            Ok(())
        }
        Err(failure) => {
            // Keep the last good model reachable for inspection.
            let rescue = out.join("model.last-good.ckpt");
            let _ = save_checkpoint(&failure.last_good, &rescue);
            let _ = write_history_csv(&out.join("history.csv"), &failure.history, digest);
            eprintln!(
                "train: aborted; last good checkpoint written to {}",
                rescue.display()
            );
            Err(crate::CliError::Stage(failure.error))
        }
    }
}
