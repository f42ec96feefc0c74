//! `verify`: gradient checks and metric oracles on a fresh checkout.
//!
//! Each check compares a production implementation against an independent
//! route (central finite differences or the brute-force reference module)
//! and prints one pass/fail line. Any failure exits nonzero.

use clap::Args;

use trilatent::analysis::{ari, kmeans, nmi, pca_fit, KMeansConfig};
use trilatent::data::TripletBatch;
use trilatent::matrix::Matrix;
use trilatent::mmae::{mmae_grad_check, mmae_init, FusionRule, MmaeConfig};
use trilatent::nn::{grad_check, DenseLayer, Layer, Mlp, Mode};
use trilatent::reference;
use trilatent::rng::Rng;
use trilatent::Error;

use crate::config::ConfigFile;
use crate::{CliError, CmdResult};

#[derive(Debug, Args)]
pub struct VerifyArgs {}

/// Outcome of one named check: Ok(detail) or Err(what went wrong).
pub type CheckOutcome = (String, Result<String, String>);

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.next_normal()).collect())
        .expect("sized")
}

fn gradcheck_outcome(
    name: &str,
    mlp: &Mlp,
    batch: usize,
    mode: Mode,
    tolerance: f64,
    rng: &mut Rng,
) -> CheckOutcome {
    let x = random_matrix(rng, batch, mlp.in_dim());
    let target = random_matrix(rng, batch, mlp.out_dim());
    let outcome = match grad_check(mlp, &x, &target, mode, 1e-5, tolerance) {
        Ok(report) if report.passed() => Ok(format!(
            "max_rel_err={:.3e} checked={} skipped={}",
            report.max_rel_err, report.n_checked, report.n_skipped
        )),
        Ok(report) => Err(format!(
            "max_rel_err={:.3e} at {} exceeds {tolerance:.0e}",
            report.max_rel_err, report.worst_param
        )),
        Err(e) => Err(e.to_string()),
    };
    (name.to_string(), outcome)
}

pub fn run_checks() -> Vec<CheckOutcome> {
    let mut rng = Rng::new(0x5645_5249);
    let mut checks = Vec::new();

    // Layer-type gradient checks against central finite differences.
    let linear = Mlp::new(2, &[], 2, &mut rng).expect("valid dims");
    checks.push(gradcheck_outcome("dense_linear_gradcheck", &linear, 4, Mode::Eval, 1e-8, &mut rng));

    let relu_stack = Mlp::from_layer_stack(
        vec![
            Layer::Dense(DenseLayer::init(3, 5, &mut rng)),
            Layer::Relu,
            Layer::Dense(DenseLayer::init(5, 2, &mut rng)),
        ],
        3,
        2,
    )
    .expect("valid stack");
    checks.push(gradcheck_outcome("relu_stack_gradcheck", &relu_stack, 6, Mode::Eval, 1e-4, &mut rng));

    let bn_mlp = Mlp::new(4, &[5, 4], 3, &mut rng).expect("valid dims");
    checks.push(gradcheck_outcome("batchnorm_mlp_gradcheck", &bn_mlp, 8, Mode::Train, 1e-4, &mut rng));

    // Full toy model: inputs 4/6/5, latent 3, batch 8, joint backward.
    let toy_cfg = MmaeConfig {
        latent_dim: 3,
        hidden: vec![5, 4],
        input_dims: (4, 6, 5),
        loss_weights: (1.0, 1.0, 1.0),
        fusion: FusionRule::Mean,
        alignment_weight: 0.2,
        lr: 1e-3,
        batch_size: 8,
        epochs: 1,
        seed: 7,
    };
    let toy = mmae_init(toy_cfg).expect("valid config");
    let batch = TripletBatch {
        image: random_matrix(&mut rng, 8, 4),
        audio: random_matrix(&mut rng, 8, 6),
        text: random_matrix(&mut rng, 8, 5),
        labels: vec![0; 8],
        indices: (0..8).collect(),
    };
    let outcome = match mmae_grad_check(&toy, &batch, 1e-5, 1e-4) {
        Ok(report) if report.passed() => Ok(format!(
            "max_rel_err={:.3e} checked={} skipped={}",
            report.max_rel_err, report.n_checked, report.n_skipped
        )),
        Ok(report) => Err(format!(
            "max_rel_err={:.3e} at {} exceeds 1e-4",
            report.max_rel_err, report.worst_param
        )),
        Err(e) => Err(e.to_string()),
    };
    checks.push(("mmae_joint_gradcheck".to_string(), outcome));

    // ARI and NMI against brute-force pair counting / entropy sums.
    checks.push(("ari_nmi_oracle".to_string(), metric_oracle(&mut rng)));

    // Best-of-restarts K-Means against exhaustive bipartition search.
    checks.push(("kmeans_toy_optimality".to_string(), kmeans_oracle(&mut rng)));

    // PCA explained variances against a covariance eigendecomposition.
    checks.push(("pca_eigen_oracle".to_string(), pca_oracle(&mut rng)));

    // MSE against naive elementwise summation.
    checks.push(("mse_oracle".to_string(), {
        let pred = random_matrix(&mut rng, 7, 5);
        let target = random_matrix(&mut rng, 7, 5);
        match trilatent::nn::mse_loss(&pred, &target) {
            Ok((loss, _)) => {
                let naive = reference::mse_naive(&pred, &target);
                if (loss - naive).abs() < 1e-12 {
                    Ok(format!("|diff|={:.3e}", (loss - naive).abs()))
                } else {
                    Err(format!("loss {loss} vs naive {naive}"))
                }
            }
            Err(e) => Err(e.to_string()),
        }
    }));

    checks
}

fn metric_oracle(rng: &mut Rng) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = 2 + rng.next_index(11);
        let ka = 1 + rng.next_index(4);
        let kb = 1 + rng.next_index(4);
        let a: Vec<i64> = (0..n).map(|_| rng.next_index(ka) as i64).collect();
        let b: Vec<i64> = (0..n).map(|_| rng.next_index(kb) as i64).collect();
        let ari_diff = (ari(&a, &b).map_err(|e| e.to_string())? - reference::ari_pair_count(&a, &b)).abs();
        let nmi_diff = (nmi(&a, &b).map_err(|e| e.to_string())? - reference::nmi_entropy(&a, &b)).abs();
        worst = worst.max(ari_diff).max(nmi_diff);
        if ari_diff > 1e-10 || nmi_diff > 1e-10 {
            return Err(format!("oracle deviation {worst:.3e} on {a:?} vs {b:?}"));
        }
    }
    let identical = ari(&[0, 0, 1, 2], &[5, 5, 6, 7]).map_err(|e| e.to_string())?;
    if identical != 1.0 {
        return Err(format!("identical partitions gave ARI {identical}, want exactly 1"));
    }
    let identical_nmi = nmi(&[0, 0, 1, 2], &[5, 5, 6, 7]).map_err(|e| e.to_string())?;
    if identical_nmi != 1.0 {
        return Err(format!("identical partitions gave NMI {identical_nmi}, want exactly 1"));
    }
    let single = nmi(&[0, 0, 0], &[0, 1, 2]).map_err(|e| e.to_string())?;
    if single != 0.0 {
        return Err(format!("single-cluster NMI {single}, want exactly 0"));
    }
    Ok(format!("200 label pairs, worst |diff|={worst:.3e}"))
}

fn kmeans_oracle(rng: &mut Rng) -> Result<String, String> {
    let trials = 50;
    let mut matched = 0;
    for trial in 0..trials {
        let n = 4 + rng.next_index(5); // 4..=8
        let dim = 1 + rng.next_index(3); // 1..=3
        let x = random_matrix(rng, n, dim);
        let result = kmeans(&x, &KMeansConfig::new(2, 1000 + trial as u64)).map_err(|e| e.to_string())?;
        let optimum = reference::kmeans_two_cluster_optimum(&x);
        if result.inertia < optimum - 1e-9 {
            return Err(format!(
                "inertia {} below exhaustive optimum {optimum} (impossible)",
                result.inertia
            ));
        }
        if (result.inertia - optimum).abs() <= 1e-9 {
            matched += 1;
        }
    }
    if matched >= 48 {
        Ok(format!("{matched}/{trials} instances at the exhaustive optimum"))
    } else {
        Err(format!("only {matched}/{trials} instances reached the optimum (need 48)"))
    }
}

fn pca_oracle(rng: &mut Rng) -> Result<String, String> {
    let x = random_matrix(rng, 50, 8);
    let model = pca_fit(&x, 8).map_err(|e| e.to_string())?;
    let oracle = reference::pca_covariance_eigenvalues(&x);
    let mut worst: f64 = 0.0;
    for (got, want) in model.explained_variance.iter().zip(&oracle) {
        worst = worst.max((got - want).abs());
    }
    if worst > 1e-8 {
        return Err(format!("explained variance deviation {worst:.3e} exceeds 1e-8"));
    }
    let gram = model.components.matmul_transpose_self(&model.components);
    let mut ortho: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            let expected = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((gram.get(i, j) - expected).abs());
        }
    }
    if ortho > 1e-10 {
        return Err(format!("orthonormality deviation {ortho:.3e} exceeds 1e-10"));
    }
    Ok(format!("eig |diff|={worst:.3e}, orthonormality |diff|={ortho:.3e}"))
}

pub fn run(_args: &VerifyArgs, _config: &ConfigFile) -> CmdResult {
    let checks = run_checks();
    let mut failures = 0;
    for (name, outcome) in &checks {
        match outcome {
            Ok(detail) => println!("verify: {name} pass ({detail})"),
            Err(detail) => {
                failures += 1;
                println!("verify: {name} FAIL ({detail})");
            }
        }
    }
    println!(
        "verify: {} of {} checks passed",
        checks.len() - failures,
        checks.len()
    );
    if failures > 0 {
        return Err(CliError::Stage(Error::Numerics(format!(
            "{failures} verification check(s) failed"
        ))));
    }
    Ok(())
}
