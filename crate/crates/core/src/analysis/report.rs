//! Clustering reports over a grid of k values, and their CSV form.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::kmeans::{kmeans, KMeansConfig};
use super::metrics::{ari, nmi, silhouette, silhouette_subsampled};

/// One clustering run: the row format of the evaluation tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub k: usize,
    pub silhouette: f64,
    pub ari: f64,
    pub nmi: f64,
    pub inertia: f64,
    pub assignment: Vec<i64>,
}

/// Run K-Means for every k in `k_list` and score against the true labels.
/// Silhouette is computed exactly.
pub fn grid_report(
    x: &Matrix,
    labels_true: &[i64],
    k_list: &[usize],
    cfg: &KMeansConfig,
) -> Result<Vec<ClusterReport>> {
    grid_report_with_options(x, labels_true, k_list, cfg, None)
}

/// As [`grid_report`], but optionally computing the silhouette on a seeded
/// row subsample `(max_samples, seed)` for large inputs.
pub fn grid_report_with_options(
    x: &Matrix,
    labels_true: &[i64],
    k_list: &[usize],
    cfg: &KMeansConfig,
    silhouette_subsample: Option<(usize, u64)>,
) -> Result<Vec<ClusterReport>> {
    if labels_true.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels_true.len(),
            x.rows()
        )));
    }
    let mut reports = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let run_cfg = KMeansConfig { k, ..cfg.clone() };
        let result = kmeans(x, &run_cfg)?;
        let assignment: Vec<i64> = result.assignment.iter().map(|&c| c as i64).collect();
        let sil = match silhouette_subsample {
            Some((max_samples, seed)) => silhouette_subsampled(x, &assignment, max_samples, seed)?,
            None => silhouette(x, &assignment)?,
        };
        reports.push(ClusterReport {
            k,
            silhouette: sil,
            ari: ari(labels_true, &assignment)?,
            nmi: nmi(labels_true, &assignment)?,
            inertia: result.inertia,
            assignment,
        });
    }
    Ok(reports)
}

/// A report row tagged with its provenance, matching the CSV schema
/// `(method, source, k, silhouette, ari, nmi, inertia, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub source: String,
    pub seed: u64,
    pub report: ClusterReport,
}

const CSV_HEADER: &str = "method,source,k,silhouette,ari,nmi,inertia,seed";

/// Write report rows as CSV. `meta` entries become leading `# key = value`
/// comment lines; output is byte-deterministic for identical inputs.
pub fn write_report_csv(path: &Path, rows: &[ReportRow], meta: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (key, value) in meta {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.method,
            row.source,
            row.report.k,
            row.report.silhouette,
            row.report.ari,
            row.report.nmi,
            row.report.inertia,
            row.seed,
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read back a report CSV: `(rows, metadata)`. Assignments are not stored in
/// CSV form and come back empty.
pub fn read_report_csv(path: &Path) -> Result<(Vec<ReportRow>, BTreeMap<String, String>)> {
    let text = fs::read_to_string(path)?;
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                meta.insert(key.trim().to_string(), value.trim().to_string());
            }
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::Format(format!(
                    "line {}: unexpected header {line:?}",
                    line_no + 1
                )));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format(format!(
                "line {}: expected 8 fields, got {}",
                line_no + 1,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad number {s:?}")))
        };
        rows.push(ReportRow {
            method: fields[0].to_string(),
            source: fields[1].to_string(),
            seed: fields[7]
                .parse()
                .map_err(|_| Error::Format(format!("bad seed {:?}", fields[7])))?,
            report: ClusterReport {
                k: fields[2]
                    .parse()
                    .map_err(|_| Error::Format(format!("bad k {:?}", fields[2])))?,
                silhouette: parse_f(fields[3])?,
                ari: parse_f(fields[4])?,
                nmi: parse_f(fields[5])?,
                inertia: parse_f(fields[6])?,
                assignment: Vec::new(),
            },
        });
    }
    if !saw_header {
        return Err(Error::Format("report CSV has no header".into()));
    }
    Ok((rows, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_triplets, Split, SynthSpec};

    #[test]
    fn zero_noise_grid_recovers_classes_perfectly() {
        let spec = SynthSpec {
            n_classes: 4,
            samples_per_class: 10,
            dims: (6, 5, 4),
            class_separation: 1.0,
            noise_sigma: 0.0,
            seed: 2,
        };
        let d = synth_triplets(&spec, Split::Train).unwrap();
        let reports = grid_report(
            d.image().values(),
            d.labels(),
            &[4],
            &KMeansConfig::new(4, 0),
        )
        .unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].ari, 1.0);
        assert_eq!(reports[0].nmi, 1.0);
    }

    #[test]
    fn one_report_per_k() {
        let spec = SynthSpec {
            n_classes: 3,
            samples_per_class: 8,
            dims: (4, 4, 4),
            class_separation: 1.0,
            noise_sigma: 0.02,
            seed: 3,
        };
        let d = synth_triplets(&spec, Split::Train).unwrap();
        let reports = grid_report(
            d.image().values(),
            d.labels(),
            &[2, 3, 5],
            &KMeansConfig::new(3, 1),
        )
        .unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(
            reports.iter().map(|r| r.k).collect::<Vec<_>>(),
            vec![2, 3, 5]
        );
    }

    #[test]
    fn csv_round_trip_preserves_rows_and_meta() {
        let rows = vec![ReportRow {
            method: "fusion_pca".into(),
            source: "fused".into(),
            seed: 42,
            report: ClusterReport {
                k: 10,
                silhouette: 0.625,
                ari: 0.91,
                nmi: 0.9625,
                inertia: 123.456,
                assignment: Vec::new(),
            },
        }];
        let dir = std::env::temp_dir().join("trilatent-report-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.csv");
        let meta = vec![("seed".to_string(), "42".to_string())];
        write_report_csv(&path, &rows, &meta).unwrap();
        let (back, back_meta) = read_report_csv(&path).unwrap();
        assert_eq!(back, rows);
        assert_eq!(back_meta.get("seed").map(String::as_str), Some("42"));
        // Writing again is byte-identical.
        let first = std::fs::read(&path).unwrap();
        write_report_csv(&path, &rows, &meta).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}
