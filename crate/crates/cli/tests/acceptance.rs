//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The mandatory checks need no external data. Criteria 9 and 10 reproduce
//! published-scale numbers and only run when `TRILATENT_LUMA_DIR` points at a
//! directory containing `train.manifest` / `test.manifest` for the real
//! feature bundle; otherwise they print a skip line and succeed vacuously.
//!
//! The heavy synthetic pipeline (criteria 5-7) runs once per configuration in
//! a shared fixture; individual tests assert different properties of it.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use trilatent::analysis::{ari, kmeans, read_report_csv, KMeansConfig};
use trilatent::data::{manifest, synth_triplets, DatasetStats, Split, SynthSpec};
use trilatent::matrix::Matrix;
use trilatent::mmae::{embed, mmae_init, train, EmbedSource, MmaeConfig};
use trilatent::projection::{tsne, TsneConfig};
use trilatent::rng::Rng;

use trilatent_cli::commands::{baseline, cluster, embed as embed_cmd, synth, train as train_cmd, verify};
use trilatent_cli::config::ConfigFile;

fn temp_root() -> PathBuf {
    std::env::temp_dir().join("trilatent-acceptance")
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = temp_root().join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn no_flags() -> ConfigFile {
    ConfigFile::default()
}

/// The acceptance synthetic recipe: 10 classes, 100 per class, the
/// published feature dimensions, separation 10x noise, seed 42.
fn acceptance_spec_flags(out: &Path) -> synth::SynthArgs {
    synth::SynthArgs {
        out: Some(out.to_path_buf()),
        classes: Some(10),
        per_class: Some(100),
        dims: Some("50,1024,768".into()),
        separation: Some(1.0),
        noise: Some(0.1),
        seed: Some(42),
        splits: Some("train,test".into()),
    }
}

struct PipelineArtifacts {
    epoch1_loss: f64,
    final_loss: f64,
    mmae_ari: f64,
    mmae_nmi: f64,
    baseline_fused_ari: f64,
    history_csv: Vec<u8>,
    cluster_csv: Vec<u8>,
    baseline_csv: Vec<u8>,
    wall: Duration,
}

/// One full pipeline pass through the real CLI stages: synth, train (50
/// epochs, Adam, lr 1e-3, batch 128, seed 42), embed, cluster at k=10, and
/// the raw-concatenation PCA-50 baseline.
fn run_pipeline(tag: &str) -> PipelineArtifacts {
    let started = Instant::now();
    let root = fresh_dir(tag);
    let data = root.join("data");
    synth::run(&acceptance_spec_flags(&data), &no_flags()).expect("synth stage");

    let model_dir = root.join("model");
    train_cmd::run(
        &train_cmd::TrainArgs {
            data: Some(data.join("train.manifest")),
            out: Some(model_dir.clone()),
            latent: Some(128),
            hidden: Some("128,128".into()),
            epochs: Some(50),
            batch: Some(128),
            lr: Some(1e-3),
            weights: Some("1,1,1".into()),
            fusion: Some("mean".into()),
            align_weight: Some(0.0),
            seed: Some(42),
        },
        &no_flags(),
    )
    .expect("train stage");

    let emb_dir = root.join("emb");
    embed_cmd::run(
        &embed_cmd::EmbedArgs {
            checkpoint: Some(model_dir.join("model.ckpt")),
            data: Some(data.join("test.manifest")),
            stats: Some(model_dir.join("stats.bin")),
            out: Some(emb_dir.clone()),
            sources: Some("fused".into()),
        },
        &no_flags(),
    )
    .expect("embed stage");

    let cluster_dir = root.join("cluster");
    cluster::run(
        &cluster::ClusterArgs {
            embeddings: Some(emb_dir.join("embedding_test_fused.npy")),
            labels: Some(emb_dir.join("labels_test.npy")),
            out: Some(cluster_dir.clone()),
            k_list: Some("10".into()),
            seed: Some(42),
            method: Some("mmae".into()),
            source: Some("fused".into()),
            silhouette_subsample: None,
        },
        &no_flags(),
    )
    .expect("cluster stage");

    let baseline_dir = root.join("baseline");
    baseline::run(
        &baseline::BaselineArgs {
            train_data: Some(data.join("train.manifest")),
            eval_data: Some(data.join("test.manifest")),
            out: Some(baseline_dir.clone()),
            k_list: Some("10".into()),
            fusion_weights: Some("1,1,1".into()),
            pca_dims: Some("50,256,256".into()),
            fusion_pca: Some(50),
            seed: Some(42),
            silhouette_subsample: None,
        },
        &no_flags(),
    )
    .expect("baseline stage");

    // Collect the numbers back from the artifacts the stages wrote.
    let history = std::fs::read_to_string(model_dir.join("history.csv")).unwrap();
    let totals: Vec<f64> = history
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("epoch"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let (rows, _) = read_report_csv(&cluster_dir.join("cluster.csv")).unwrap();
    let mmae_row = rows.iter().find(|r| r.report.k == 10).expect("k=10 row");
    let (base_rows, _) = read_report_csv(&baseline_dir.join("baseline.csv")).unwrap();
    let fused_row = base_rows
        .iter()
        .find(|r| r.method == "fusion_pca" && r.report.k == 10)
        .expect("fusion row");

    PipelineArtifacts {
        epoch1_loss: totals[0],
        final_loss: *totals.last().unwrap(),
        mmae_ari: mmae_row.report.ari,
        mmae_nmi: mmae_row.report.nmi,
        baseline_fused_ari: fused_row.report.ari,
        history_csv: std::fs::read(model_dir.join("history.csv")).unwrap(),
        cluster_csv: std::fs::read(cluster_dir.join("cluster.csv")).unwrap(),
        baseline_csv: std::fs::read(baseline_dir.join("baseline.csv")).unwrap(),
        wall: started.elapsed(),
    }
}

fn pipeline_first() -> &'static PipelineArtifacts {
    static RUN: OnceLock<PipelineArtifacts> = OnceLock::new();
    RUN.get_or_init(|| run_pipeline("pipeline-a"))
}

fn pipeline_repeat() -> &'static PipelineArtifacts {
    static RUN: OnceLock<PipelineArtifacts> = OnceLock::new();
    RUN.get_or_init(|| run_pipeline("pipeline-b"))
}

fn verify_checks() -> &'static Vec<verify::CheckOutcome> {
    static CHECKS: OnceLock<(Vec<verify::CheckOutcome>, Duration)> = OnceLock::new();
    &CHECKS
        .get_or_init(|| {
            let started = Instant::now();
            let checks = verify::run_checks();
            (checks, started.elapsed())
        })
        .0
}

fn verify_runtime() -> Duration {
    static CHECKS: OnceLock<Duration> = OnceLock::new();
    *CHECKS.get_or_init(|| {
        let started = Instant::now();
        let _ = verify::run_checks();
        started.elapsed()
    })
}

fn check_named(name: &str) -> &'static (String, Result<String, String>) {
    verify_checks()
        .iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("verify has no check named {name}"))
}

fn pass(line: &str) {
    println!("acceptance: {line}: PASS");
}

#[test]
fn criterion_01_gradient_soundness() {
    let runtime = verify_runtime();
    for name in [
        "dense_linear_gradcheck",
        "relu_stack_gradcheck",
        "batchnorm_mlp_gradcheck",
        "mmae_joint_gradcheck",
    ] {
        let (_, outcome) = check_named(name);
        assert!(
            outcome.is_ok(),
            "acceptance: criterion 1 (gradient soundness): FAIL at {name}: {:?}",
            outcome.as_ref().err()
        );
    }
    assert!(
        runtime < Duration::from_secs(30),
        "acceptance: criterion 1: FAIL, gradient checks took {runtime:?} (budget 30 s)"
    );
    pass(&format!(
        "criterion 1 (gradient soundness, all layer types + toy joint model, {} ms)",
        runtime.as_millis()
    ));
}

#[test]
fn criterion_02_metric_oracles() {
    let (_, outcome) = check_named("ari_nmi_oracle");
    assert!(
        outcome.is_ok(),
        "acceptance: criterion 2 (metric oracles): FAIL: {:?}",
        outcome.as_ref().err()
    );
    pass(&format!(
        "criterion 2 (ARI/NMI vs brute force, {})",
        outcome.as_ref().unwrap()
    ));
}

#[test]
fn criterion_03_kmeans_toy_optimality() {
    let (_, outcome) = check_named("kmeans_toy_optimality");
    assert!(
        outcome.is_ok(),
        "acceptance: criterion 3 (K-Means toy optimality): FAIL: {:?}",
        outcome.as_ref().err()
    );
    pass(&format!(
        "criterion 3 (K-Means vs exhaustive bipartitions, {})",
        outcome.as_ref().unwrap()
    ));
}

#[test]
fn criterion_04_pca_oracle() {
    let (_, outcome) = check_named("pca_eigen_oracle");
    assert!(
        outcome.is_ok(),
        "acceptance: criterion 4 (PCA oracle): FAIL: {:?}",
        outcome.as_ref().err()
    );
    pass(&format!(
        "criterion 4 (PCA vs covariance eigendecomposition, {})",
        outcome.as_ref().unwrap()
    ));
}

#[test]
fn criterion_05_end_to_end_synthetic_pipeline() {
    let run = pipeline_first();
    assert!(
        run.wall < Duration::from_secs(600),
        "acceptance: criterion 5: FAIL, pipeline took {:?} (budget 10 min)",
        run.wall
    );
    let ratio = run.final_loss / run.epoch1_loss;
    assert!(
        ratio < 0.10,
        "acceptance: criterion 5a: FAIL, final loss {} is {:.1}% of epoch-1 loss {}",
        run.final_loss,
        100.0 * ratio,
        run.epoch1_loss
    );
    assert!(
        run.mmae_ari >= 0.95 && run.mmae_nmi >= 0.95,
        "acceptance: criterion 5b: FAIL, fused test latents scored ARI {} / NMI {}",
        run.mmae_ari,
        run.mmae_nmi
    );
    assert!(
        run.mmae_ari > run.baseline_fused_ari,
        "acceptance: criterion 5c: FAIL, MMAE ARI {} does not exceed PCA-50 baseline ARI {}",
        run.mmae_ari,
        run.baseline_fused_ari
    );
    pass(&format!(
        "criterion 5 (synthetic pipeline: loss ratio {:.4}, latent ARI {:.4} / NMI {:.4}, baseline ARI {:.4}, {:.1} s)",
        ratio,
        run.mmae_ari,
        run.mmae_nmi,
        run.baseline_fused_ari,
        run.wall.as_secs_f64()
    ));
}

#[test]
fn criterion_06_cross_modal_convergence() {
    // Same pipeline data; training differs only in the alignment penalty.
    let spec = SynthSpec {
        n_classes: 10,
        samples_per_class: 100,
        dims: (50, 1024, 768),
        class_separation: 1.0,
        noise_sigma: 0.1,
        seed: 42,
    };
    let train_raw = synth_triplets(&spec, Split::Train).unwrap();
    let test_raw = synth_triplets(&spec, Split::Test).unwrap();
    let stats = DatasetStats::fit(&train_raw).unwrap();
    let train_data = stats.apply(&train_raw).unwrap();
    let test_data = stats.apply(&test_raw).unwrap();
    let cfg = MmaeConfig {
        epochs: 50,
        alignment_weight: 0.1,
        ..MmaeConfig::default()
    };
    let model = mmae_init(cfg).unwrap();
    let (model, _) = train(model, &train_data).unwrap();

    let per_modality = [
        embed(&model, &test_data, EmbedSource::Image).unwrap(),
        embed(&model, &test_data, EmbedSource::Audio).unwrap(),
        embed(&model, &test_data, EmbedSource::Text).unwrap(),
    ];
    let n = test_data.n_samples();
    // Numerator: mean distance between the three embeddings of one sample.
    let mut same = 0.0;
    for i in 0..n {
        for a in 0..3 {
            for b in (a + 1)..3 {
                same += Matrix::row_distance_sq(&per_modality[a], i, &per_modality[b], i).sqrt();
            }
        }
    }
    same /= (3 * n) as f64;
    // Denominator: mean distance between embeddings of different-class
    // samples, over all pairs, cycling the modality deterministically.
    let labels = test_data.labels();
    let mut cross = 0.0;
    let mut count = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] != labels[j] {
                let z = &per_modality[(i + j) % 3];
                cross += Matrix::row_distance_sq(z, i, z, j).sqrt();
                count += 1;
            }
        }
    }
    cross /= count as f64;
    let ratio = same / cross;
    assert!(
        ratio < 0.5,
        "acceptance: criterion 6 (cross-modal convergence): FAIL, same-sample cross-modal \
         distance {same:.4} is {ratio:.3}x the different-class distance {cross:.4} (threshold 0.5x). \
         Known limitation: the per-modality nuisance structure the pipeline criteria require \
         keeps per-modality embeddings apart at lambda_align = 0.1; see the decisions ledger."
    );
    pass(&format!(
        "criterion 6 (cross-modal convergence: ratio {ratio:.3})"
    ));
}

#[test]
fn criterion_07_determinism() {
    let a = pipeline_first();
    let b = pipeline_repeat();
    assert_eq!(
        a.history_csv, b.history_csv,
        "acceptance: criterion 7: FAIL, history.csv differs between identical runs"
    );
    assert_eq!(
        a.cluster_csv, b.cluster_csv,
        "acceptance: criterion 7: FAIL, cluster.csv differs between identical runs"
    );
    assert_eq!(
        a.baseline_csv, b.baseline_csv,
        "acceptance: criterion 7: FAIL, baseline.csv differs between identical runs"
    );
    pass("criterion 7 (repeat run reproduces every CSV byte-identically)");
}

#[test]
fn criterion_08_tsne_sanity() {
    // Two far-separated blobs, 50 points each.
    let mut rng = Rng::new(1);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for blob in 0..2i64 {
        for _ in 0..50 {
            let mut row = vec![0.0; 10];
            for (d, v) in row.iter_mut().enumerate() {
                *v = rng.next_normal() + if d == 0 { blob as f64 * 50.0 } else { 0.0 };
            }
            rows.push(row);
            labels.push(blob);
        }
    }
    let x = Matrix::from_rows(&rows).unwrap();
    let projection = tsne(&x, &TsneConfig::default()).unwrap();
    let clusters = kmeans(&projection.coords, &KMeansConfig::new(2, 42)).unwrap();
    let assignment: Vec<i64> = clusters.assignment.iter().map(|&c| c as i64).collect();
    let score = ari(&labels, &assignment).unwrap();
    assert_eq!(
        score, 1.0,
        "acceptance: criterion 8: FAIL, 2-means on the projection scored ARI {score}"
    );
    assert!(
        projection.final_kl < projection.kl_after_exaggeration,
        "acceptance: criterion 8: FAIL, final KL {} not below iteration-250 KL {}",
        projection.final_kl,
        projection.kl_after_exaggeration
    );
    pass(&format!(
        "criterion 8 (t-SNE blobs: ARI 1.0, KL {:.4} -> {:.4})",
        projection.kl_after_exaggeration, projection.final_kl
    ));
}

// ---------------------------------------------------------------------------
// Reproduction suite: requires the external feature bundle.
// ---------------------------------------------------------------------------

fn luma_dir() -> Option<PathBuf> {
    std::env::var_os("TRILATENT_LUMA_DIR").map(PathBuf::from)
}

struct LumaData {
    train: trilatent::data::TripletDataset,
    test: trilatent::data::TripletDataset,
}

fn load_luma(dir: &Path) -> LumaData {
    let train_raw = manifest::load_dataset(&dir.join("train.manifest"), None).expect("train split");
    let test_raw = manifest::load_dataset(&dir.join("test.manifest"), None).expect("test split");
    let stats = DatasetStats::fit(&train_raw).unwrap();
    LumaData {
        train: stats.apply(&train_raw).unwrap(),
        test: stats.apply(&test_raw).unwrap(),
    }
}

#[test]
fn criterion_09_published_image_row() {
    let Some(dir) = luma_dir() else {
        println!("acceptance: criterion 9 (published image row): SKIP (set TRILATENT_LUMA_DIR to run)");
        return;
    };
    let data = load_luma(&dir);
    let model = trilatent::analysis::pca_fit(data.train.image().values(), 50).unwrap();
    let scores = trilatent::analysis::pca_transform(&model, data.test.image().values()).unwrap();
    let reports = trilatent::analysis::grid_report(
        &scores,
        data.test.labels(),
        &[42],
        &KMeansConfig::new(42, 42),
    )
    .unwrap();
    let row = &reports[0];
    let (sil, ari_v, nmi_v) = (row.silhouette, row.ari, row.nmi);
    for (name, got, want) in [
        ("silhouette", sil, 0.418),
        ("ari", ari_v, 0.545),
        ("nmi", nmi_v, 0.724),
    ] {
        assert!(
            (got - want).abs() <= 0.02,
            "acceptance: criterion 9: FAIL, image-row {name} {got:.3} vs published {want} (tol 0.02)"
        );
    }
    pass(&format!(
        "criterion 9 (image row k=42: sil {sil:.3}, ari {ari_v:.3}, nmi {nmi_v:.3})"
    ));
}

#[test]
fn criterion_10_published_latent_row_and_ordering() {
    let Some(dir) = luma_dir() else {
        println!("acceptance: criterion 10 (published latent row): SKIP (set TRILATENT_LUMA_DIR to run)");
        return;
    };
    let data = load_luma(&dir);
    let cfg = MmaeConfig::default(); // latent 128, 100 epochs, lr 1e-3, batch 128, seed 42
    let model = mmae_init(cfg).unwrap();
    let (model, _) = train(model, &data.train).unwrap();
    let latents = embed(&model, &data.test, EmbedSource::Fused).unwrap();
    let reports = trilatent::analysis::grid_report(
        &latents,
        data.test.labels(),
        &[42],
        &KMeansConfig::new(42, 42),
    )
    .unwrap();
    let latent_row = &reports[0];
    for (name, got, want) in [
        ("silhouette", latent_row.silhouette, 0.630),
        ("ari", latent_row.ari, 0.914),
        ("nmi", latent_row.nmi, 0.962),
    ] {
        assert!(
            (got - want).abs() <= 0.05,
            "acceptance: criterion 10: FAIL, latent {name} {got:.3} vs published {want} (tol 0.05)"
        );
    }

    // Ordering: latent row strictly above fusion baseline, which sits above
    // the audio/text single-modality rows, for both ARI and NMI.
    let fused_train = trilatent::analysis::fuse_concat(
        data.train.image(),
        data.train.audio(),
        data.train.text(),
        &trilatent::analysis::FusionWeights::default(),
    )
    .unwrap();
    let fused_test = trilatent::analysis::fuse_concat(
        data.test.image(),
        data.test.audio(),
        data.test.text(),
        &trilatent::analysis::FusionWeights::default(),
    )
    .unwrap();
    let fusion_model = trilatent::analysis::pca_fit(&fused_train, 50).unwrap();
    let fusion_scores = trilatent::analysis::pca_transform(&fusion_model, &fused_test).unwrap();
    let fusion_row = &trilatent::analysis::grid_report(
        &fusion_scores,
        data.test.labels(),
        &[42],
        &KMeansConfig::new(42, 42),
    )
    .unwrap()[0];

    let mut single_rows = Vec::new();
    for (modality, target) in [
        (trilatent::data::Modality::Audio, 256usize),
        (trilatent::data::Modality::Text, 256),
    ] {
        let train_x = data.train.modality(modality).values();
        let test_x = data.test.modality(modality).values();
        let d = target.min(train_x.cols()).min(train_x.rows() - 1);
        let pca = trilatent::analysis::pca_fit(train_x, d).unwrap();
        let scores = trilatent::analysis::pca_transform(&pca, test_x).unwrap();
        let row = trilatent::analysis::grid_report(
            &scores,
            data.test.labels(),
            &[42],
            &KMeansConfig::new(42, 42),
        )
        .unwrap()
        .remove(0);
        single_rows.push(row);
    }
    for (metric, latent, fusion) in [
        ("ari", latent_row.ari, fusion_row.ari),
        ("nmi", latent_row.nmi, fusion_row.nmi),
    ] {
        assert!(
            latent > fusion,
            "acceptance: criterion 10: FAIL, latent {metric} {latent:.3} not above fusion {fusion:.3}"
        );
    }
    for row in &single_rows {
        assert!(
            fusion_row.ari > row.ari && fusion_row.nmi > row.nmi,
            "acceptance: criterion 10: FAIL, fusion row not above a single-modality row"
        );
    }
    pass(&format!(
        "criterion 10 (latent row k=42: sil {:.3}, ari {:.3}, nmi {:.3}; ordering holds)",
        latent_row.silhouette, latent_row.ari, latent_row.nmi
    ));
}
