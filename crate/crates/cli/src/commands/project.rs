//! `project`: 2-D projection (t-SNE or PCA) of embeddings, with SVG and CSV
//! output. Supports a per-class scatter of one embedding file or a modality
//! overlay of several.

use std::path::PathBuf;

use clap::Args;

use trilatent::data::npy;
use trilatent::matrix::Matrix;
use trilatent::projection::{emit_scatter, pca2d, tsne, write_projection_csv, LearningRate, TsneConfig};
use trilatent::{Error, Result};

use crate::config::{parse_list, ConfigFile};
use crate::digest::{config_digest, record_digests};
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, read_matrix_any, require_path};

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Embedding matrix to project (array file or CSV; per-class scatter mode).
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// True labels for coloring (required with --embeddings).
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Overlay mode: comma-separated embedding files projected jointly.
    #[arg(long)]
    pub overlay: Option<String>,
    /// Legend names for the overlay files (default image,audio,text).
    #[arg(long)]
    pub overlay_names: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Projection method: tsne or pca.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// t-SNE learning rate: a number, or `auto`.
    #[arg(long)]
    pub tsne_lr: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Source tag written to the CSV (default fused).
    #[arg(long)]
    pub source: Option<String>,
    /// Output file stem (default: the method name).
    #[arg(long)]
    pub name: Option<String>,
}

fn parse_lr(raw: &str) -> Result<LearningRate> {
    if raw == "auto" {
        return Ok(LearningRate::Auto);
    }
    raw.parse()
        .map(LearningRate::Fixed)
        .map_err(|_| Error::Config(format!("tsne-lr must be a number or `auto`, got {raw:?}")))
}

pub fn run(args: &ProjectArgs, config: &ConfigFile) -> CmdResult {
    let out = require_path(&args.out, config, "out").validation()?;
    let method = args
        .method
        .clone()
        .or_else(|| config.raw("method").map(str::to_string))
        .unwrap_or_else(|| "tsne".to_string());
    if method != "tsne" && method != "pca" {
        return Err(Error::Config(format!(
            "method must be tsne or pca, got {method:?}"
        )))
        .validation();
    }
    let seed = config.resolve(args.seed, "seed", 42).validation()?;
    let lr_raw = args
        .tsne_lr
        .clone()
        .or_else(|| config.raw("tsne-lr").map(str::to_string))
        .unwrap_or_else(|| "auto".to_string());
    let tsne_cfg = TsneConfig {
        perplexity: config.resolve(args.perplexity, "perplexity", 30.0).validation()?,
        n_iter: config.resolve(args.iters, "iters", 1000).validation()?,
        learning_rate: parse_lr(&lr_raw).validation()?,
        seed,
        ..TsneConfig::default()
    };
    let source = args
        .source
        .clone()
        .or_else(|| config.raw("source").map(str::to_string))
        .unwrap_or_else(|| "fused".to_string());
    let stem = args.name.clone().unwrap_or_else(|| method.clone());

    // Assemble the point set and its legend labels.
    let (x, point_labels): (Matrix, Vec<String>) = match (&args.embeddings, &args.overlay) {
        (Some(path), None) => {
            let x = read_matrix_any(path).stage()?;
            let labels_path = require_path(&args.labels, config, "labels").validation()?;
            let labels = npy::read_labels(&labels_path).stage()?;
            if labels.len() != x.rows() {
                return Err(Error::Shape(format!(
                    "{} labels for {} embedding rows",
                    labels.len(),
                    x.rows()
                )))
                .stage();
            }
            let names = labels.iter().map(|l| format!("class {l}")).collect();
            (x, names)
        }
        (None, Some(list)) => {
            let files: Vec<String> = parse_list(list, "overlay").validation()?;
            let names_raw = args
                .overlay_names
                .clone()
                .or_else(|| config.raw("overlay-names").map(str::to_string))
                .unwrap_or_else(|| "image,audio,text".to_string());
            let names: Vec<String> = parse_list(&names_raw, "overlay-names").validation()?;
            if names.len() != files.len() {
                return Err(Error::Config(format!(
                    "{} overlay names for {} files",
                    names.len(),
                    files.len()
                )))
                .validation();
            }
            let mut combined: Option<Matrix> = None;
            let mut labels = Vec::new();
            for (file, name) in files.iter().zip(&names) {
                let m = read_matrix_any(std::path::Path::new(file)).stage()?;
                labels.extend(std::iter::repeat_n(name.clone(), m.rows()));
                combined = Some(match combined {
                    Some(acc) => acc.vconcat(&m).stage()?,
                    None => m,
                });
            }
            let x = combined
                .ok_or_else(|| Error::Config("overlay list is empty".into()))
                .validation()?;
            (x, labels)
        }
        _ => {
            return Err(Error::Config(
                "exactly one of --embeddings or --overlay is required".into(),
            ))
            .validation();
        }
    };
    ensure_out_dir(&out).validation()?;

    let projection = match method.as_str() {
        "tsne" => tsne(&x, &tsne_cfg).stage()?,
        _ => pca2d(&x).stage()?,
    };
    let svg_name = format!("{stem}.svg");
    let csv_name = format!("{stem}.csv");
    emit_scatter(&projection, &point_labels, &out.join(&svg_name)).stage()?;
    let meta = vec![
        ("seed".to_string(), seed.to_string()),
        (
            "config".to_string(),
            format!("{:016x}", config_digest(&projection.config_summary)),
        ),
    ];
    write_projection_csv(&out.join(&csv_name), &projection, &point_labels, &source, &meta)
        .stage()?;
    record_digests(&out, &[svg_name.clone(), csv_name.clone()]).stage()?;
    println!(
        "project: {method} of {} points -> {svg_name}, {csv_name} (final KL {:.6})",
        x.rows(),
        projection.final_kl
    );
    Ok(())
}
