//! `baseline`: single-modality PCA + K-Means and weighted fusion PCA +
//! K-Means, scored against the true labels.

use std::path::PathBuf;

use clap::Args;

use trilatent::analysis::{
    fuse_concat, grid_report_with_options, pca_fit, pca_transform, write_report_csv, FusionWeights,
    KMeansConfig, ReportRow,
};
use trilatent::data::{manifest, DatasetStats, Modality};

use crate::config::{parse_list, parse_triple, ConfigFile};
use crate::digest::{config_digest, record_digests};
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, require_path};

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Training-split manifest (PCA and standardization are fit here).
    #[arg(long, value_name = "MANIFEST")]
    pub train_data: Option<PathBuf>,
    /// Evaluation-split manifest (clustering is scored here).
    #[arg(long, value_name = "MANIFEST")]
    pub eval_data: Option<PathBuf>,
    /// Output directory (baseline.csv).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// K values for the clustering grid.
    #[arg(long)]
    pub k_list: Option<String>,
    /// Fusion weights alpha,beta,gamma.
    #[arg(long)]
    pub fusion_weights: Option<String>,
    /// Per-modality PCA target dims image,audio,text (clamped to the data).
    #[arg(long)]
    pub pca_dims: Option<String>,
    /// PCA target dim for the fused features.
    #[arg(long)]
    pub fusion_pca: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compute silhouettes on at most this many rows (seeded subsample).
    #[arg(long)]
    pub silhouette_subsample: Option<usize>,
}

pub fn run(args: &BaselineArgs, config: &ConfigFile) -> CmdResult {
    let train_path = require_path(&args.train_data, config, "train-data").validation()?;
    let eval_path = require_path(&args.eval_data, config, "eval-data").validation()?;
    let out = require_path(&args.out, config, "out").validation()?;
    let k_raw = args
        .k_list
        .clone()
        .or_else(|| config.raw("k-list").map(str::to_string))
        .unwrap_or_else(|| "30,40,42,50,60".to_string());
    let k_list: Vec<usize> = parse_list(&k_raw, "k-list").validation()?;
    let weights_raw = args
        .fusion_weights
        .clone()
        .or_else(|| config.raw("fusion-weights").map(str::to_string))
        .unwrap_or_else(|| "1,1,1".to_string());
    let (alpha, beta, gamma) = parse_triple(&weights_raw, "fusion-weights").validation()?;
    let weights = FusionWeights { alpha, beta, gamma };
    weights.validate().validation()?;
    let pca_raw = args
        .pca_dims
        .clone()
        .or_else(|| config.raw("pca-dims").map(str::to_string))
        .unwrap_or_else(|| "50,256,256".to_string());
    let pca_dims = parse_triple::<usize>(&pca_raw, "pca-dims").validation()?;
    let fusion_pca = config.resolve(args.fusion_pca, "fusion-pca", 50).validation()?;
    let seed = config.resolve(args.seed, "seed", 42).validation()?;
    let subsample = config
        .resolve_opt(args.silhouette_subsample, "silhouette-subsample")
        .validation()?
        .map(|n| (n, seed));
    ensure_out_dir(&out).validation()?;

    let train_raw = manifest::load_dataset(&train_path, None).stage()?;
    let eval_raw = manifest::load_dataset(&eval_path, None).stage()?;
    let stats = DatasetStats::fit(&train_raw).stage()?;
    let train = stats.apply(&train_raw).stage()?;
    let eval = stats.apply(&eval_raw).stage()?;
    let labels = eval.labels();
    let km = KMeansConfig::new(0, seed);
    let mut rows: Vec<ReportRow> = Vec::new();

    // Per-modality PCA + K-Means.
    let per_modality = [
        (Modality::Image, pca_dims.0),
        (Modality::Audio, pca_dims.1),
        (Modality::Text, pca_dims.2),
    ];
    for (modality, target) in per_modality {
        let train_x = train.modality(modality).values();
        let eval_x = eval.modality(modality).values();
        let d = target.min(train_x.cols()).min(train_x.rows() - 1).max(1);
        let model = pca_fit(train_x, d).stage()?;
        let scores = pca_transform(&model, eval_x).stage()?;
        let reports =
            grid_report_with_options(&scores, labels, &k_list, &km, subsample).stage()?;
        for report in reports {
            rows.push(ReportRow {
                method: "single_pca".into(),
                source: modality.name().into(),
                seed,
                report,
            });
        }
        println!("baseline: single {modality} done (PCA {d})");
    }

    // Weighted fusion PCA + K-Means.
    let fused_train = fuse_concat(train.image(), train.audio(), train.text(), &weights).stage()?;
    let fused_eval = fuse_concat(eval.image(), eval.audio(), eval.text(), &weights).stage()?;
    let d = fusion_pca
        .min(fused_train.cols())
        .min(fused_train.rows() - 1)
        .max(1);
    let model = pca_fit(&fused_train, d).stage()?;
    let scores = pca_transform(&model, &fused_eval).stage()?;
    let reports = grid_report_with_options(&scores, labels, &k_list, &km, subsample).stage()?;
    for report in reports {
        rows.push(ReportRow {
            method: "fusion_pca".into(),
            source: "fused".into(),
            seed,
            report,
        });
    }
    println!("baseline: fusion done (PCA {d})");

    let describe = format!(
        "baseline k_list={k_list:?} weights=({},{},{}) pca_dims={pca_dims:?} fusion_pca={fusion_pca} seed={seed}",
        weights.alpha, weights.beta, weights.gamma
    );
    let meta = vec![
        ("seed".to_string(), seed.to_string()),
        ("config".to_string(), format!("{:016x}", config_digest(&describe))),
    ];
    write_report_csv(&out.join("baseline.csv"), &rows, &meta).stage()?;
    record_digests(&out, &["baseline.csv".into()]).stage()?;
    println!("baseline: wrote baseline.csv ({} rows)", rows.len());
    Ok(())
}
