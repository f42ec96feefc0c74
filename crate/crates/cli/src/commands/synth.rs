//! `synth`: write a synthetic aligned dataset.

use std::path::PathBuf;

use clap::Args;

use trilatent::data::{manifest, synth_triplets, Split, SynthSpec};

use crate::config::{parse_list, parse_triple, ConfigFile};
use crate::digest::record_digests;
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, require_path};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for array files and manifests.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of classes.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Samples per class (per split).
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Feature dimensions as image,audio,text.
    #[arg(long)]
    pub dims: Option<String>,
    /// Class separation scale.
    #[arg(long)]
    pub separation: Option<f64>,
    /// Noise scale.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Splits to generate (comma separated among train,test,ood).
    #[arg(long)]
    pub splits: Option<String>,
}

pub fn run(args: &SynthArgs, config: &ConfigFile) -> CmdResult {
    let out = require_path(&args.out, config, "out").validation()?;
    let dims_raw = args
        .dims
        .clone()
        .or_else(|| config.raw("dims").map(str::to_string))
        .unwrap_or_else(|| "50,1024,768".to_string());
    let spec = SynthSpec {
        n_classes: config.resolve(args.classes, "classes", 10).validation()?,
        samples_per_class: config.resolve(args.per_class, "per-class", 100).validation()?,
        dims: parse_triple(&dims_raw, "dims").validation()?,
        class_separation: config.resolve(args.separation, "separation", 1.0).validation()?,
        noise_sigma: config.resolve(args.noise, "noise", 0.1).validation()?,
        seed: config.resolve(args.seed, "seed", 42).validation()?,
    };
    spec.validate().validation()?;
    let splits_raw = args
        .splits
        .clone()
        .or_else(|| config.raw("splits").map(str::to_string))
        .unwrap_or_else(|| "train,test".to_string());
    let split_names: Vec<String> = parse_list(&splits_raw, "splits").validation()?;
    let splits: Vec<Split> = split_names
        .iter()
        .map(|s| Split::parse(s))
        .collect::<trilatent::Result<_>>()
        .validation()?;

    ensure_out_dir(&out).validation()?;
    for split in splits {
        let dataset = synth_triplets(&spec, split).stage()?;
        let manifest_path = manifest::save_dataset(&dataset, &out).stage()?;
        let names: Vec<String> = ["image", "audio", "text", "labels"]
            .iter()
            .map(|kind| format!("{}_{kind}.npy", split.name()))
            .chain(std::iter::once(format!("{}.manifest", split.name())))
            .collect();
        record_digests(&out, &names).stage()?;
        println!(
            "synth: wrote {} split ({} rows) -> {}",
            split.name(),
            dataset.n_samples(),
            manifest_path.display()
        );
    }
    Ok(())
}
