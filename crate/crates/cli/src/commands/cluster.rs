//! `cluster`: grid K-Means over an embedding file, scored against labels.

use std::path::PathBuf;

use clap::Args;

use trilatent::analysis::{grid_report_with_options, write_report_csv, KMeansConfig, ReportRow};
use trilatent::data::npy;

use crate::config::{parse_list, ConfigFile};
use crate::digest::{config_digest, record_digests};
use crate::{CmdResult, Phase};

use super::{ensure_out_dir, read_matrix_any, require_path};

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Embedding matrix (array file, or CSV via the secondary path).
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// True labels (1-D integer array file).
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Output directory (cluster.csv).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// K values for the clustering grid.
    #[arg(long)]
    pub k_list: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Method tag for the report rows.
    #[arg(long)]
    pub method: Option<String>,
    /// Source tag for the report rows (e.g. fused, image).
    #[arg(long)]
    pub source: Option<String>,
    /// Compute silhouettes on at most this many rows (seeded subsample).
    #[arg(long)]
    pub silhouette_subsample: Option<usize>,
}

pub fn run(args: &ClusterArgs, config: &ConfigFile) -> CmdResult {
    let embeddings = require_path(&args.embeddings, config, "embeddings").validation()?;
    let labels_path = require_path(&args.labels, config, "labels").validation()?;
    let out = require_path(&args.out, config, "out").validation()?;
    let k_raw = args
        .k_list
        .clone()
        .or_else(|| config.raw("k-list").map(str::to_string))
        .unwrap_or_else(|| "30,40,42,50,60".to_string());
    let k_list: Vec<usize> = parse_list(&k_raw, "k-list").validation()?;
    let seed = config.resolve(args.seed, "seed", 42).validation()?;
    let method = args
        .method
        .clone()
        .or_else(|| config.raw("method").map(str::to_string))
        .unwrap_or_else(|| "mmae".to_string());
    let source = args
        .source
        .clone()
        .or_else(|| config.raw("source").map(str::to_string))
        .unwrap_or_else(|| "fused".to_string());
    let subsample = config
        .resolve_opt(args.silhouette_subsample, "silhouette-subsample")
        .validation()?
        .map(|n| (n, seed));
    ensure_out_dir(&out).validation()?;

    let x = read_matrix_any(&embeddings).stage()?;
    let labels = npy::read_labels(&labels_path).stage()?;
    let reports = grid_report_with_options(&x, &labels, &k_list, &KMeansConfig::new(0, seed), subsample)
        .stage()?;
    let rows: Vec<ReportRow> = reports
        .into_iter()
        .map(|report| ReportRow {
            method: method.clone(),
            source: source.clone(),
            seed,
            report,
        })
        .collect();
    for row in &rows {
        println!(
            "cluster: k={} silhouette={:.4} ari={:.4} nmi={:.4}",
            row.report.k, row.report.silhouette, row.report.ari, row.report.nmi
        );
    }
    let describe = format!("cluster k_list={k_list:?} method={method} source={source} seed={seed}");
    let meta = vec![
        ("seed".to_string(), seed.to_string()),
        ("config".to_string(), format!("{:016x}", config_digest(&describe))),
    ];
    write_report_csv(&out.join("cluster.csv"), &rows, &meta).stage()?;
    record_digests(&out, &["cluster.csv".into()]).stage()?;
    Ok(())
}
