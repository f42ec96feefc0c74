//! `embed`: checkpoint + dataset -> latent embedding files.

use std::path::PathBuf;

use clap::Args;

use trilatent::data::{manifest, npy};
use trilatent::mmae::{embed, load_checkpoint, EmbedSource};

use crate::config::{parse_list, ConfigFile};
use crate::digest::record_digests;
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, require_path};

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Trained model checkpoint.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Dataset manifest to embed.
    #[arg(long, value_name = "MANIFEST")]
    pub data: Option<PathBuf>,
    /// Standardization stats fit on the training split.
    #[arg(long, value_name = "FILE")]
    pub stats: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Sources to extract (comma separated among fused,image,audio,text).
    #[arg(long)]
    pub sources: Option<String>,
}

pub fn run(args: &EmbedArgs, config: &ConfigFile) -> CmdResult {
    let checkpoint = require_path(&args.checkpoint, config, "checkpoint").validation()?;
    let data_path = require_path(&args.data, config, "data").validation()?;
    let stats_path = require_path(&args.stats, config, "stats").validation()?;
    let out = require_path(&args.out, config, "out").validation()?;
    let sources_raw = args
        .sources
        .clone()
        .or_else(|| config.raw("sources").map(str::to_string))
        .unwrap_or_else(|| "fused,image,audio,text".to_string());
    let names: Vec<String> = parse_list(&sources_raw, "sources").validation()?;
    let sources: Vec<EmbedSource> = names
        .iter()
        .map(|s| EmbedSource::parse(s))
        .collect::<trilatent::Result<_>>()
        .validation()?;
    ensure_out_dir(&out).validation()?;

    let model = load_checkpoint(&checkpoint).stage()?;
    let stats = manifest::load_stats(&stats_path).stage()?;
    let raw = manifest::load_dataset(&data_path, None).stage()?;
    let dataset = stats.apply(&raw).stage()?;
    let split = dataset.split().name();
    let mut written = Vec::new();
    for source in sources {
        let z = embed(&model, &dataset, source).stage()?;
        let name = format!("embedding_{split}_{}.npy", source.name());
        npy::write_matrix(&out.join(&name), &z).stage()?;
        println!("embed: wrote {name} ({} x {})", z.rows(), z.cols());
        written.push(name);
    }
    // Labels travel with the embeddings so `cluster` has everything it needs.
    let labels_name = format!("labels_{split}.npy");
    npy::write_labels(&out.join(&labels_name), dataset.labels()).stage()?;
    written.push(labels_name);
    record_digests(&out, &written).stage()?;
    Ok(())
}
