use super::*;
use crate::data::{batch_iter, epoch_seed, synth_triplets, Split, SynthSpec};
use crate::nn::{AdamHyper, AdamState};
use crate::rng::Rng;

fn toy_config() -> MmaeConfig {
    MmaeConfig {
        latent_dim: 3,
        hidden: vec![5, 4],
        input_dims: (4, 6, 5),
        loss_weights: (1.0, 1.0, 1.0),
        fusion: FusionRule::Mean,
        alignment_weight: 0.0,
        lr: 1e-3,
        batch_size: 8,
        epochs: 3,
        seed: 42,
    }
}

fn toy_batch(seed: u64, rows: usize, dims: (usize, usize, usize)) -> TripletBatch {
    let mut rng = Rng::new(seed);
    let mut gen = |cols: usize| {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.next_normal()).collect())
            .unwrap()
    };
    TripletBatch {
        image: gen(dims.0),
        audio: gen(dims.1),
        text: gen(dims.2),
        labels: vec![0; rows],
        indices: (0..rows).collect(),
    }
}

fn toy_dataset(seed: u64) -> TripletDataset {
    synth_triplets(
        &SynthSpec {
            n_classes: 5,
            samples_per_class: 20,
            dims: (8, 12, 10),
            class_separation: 4.0,
            noise_sigma: 0.05,
            seed,
        },
        Split::Train,
    )
    .unwrap()
}

#[test]
fn default_config_builds_paper_scale_encoders() {
    let model = mmae_init(MmaeConfig::default()).unwrap();
    let enc = model.encoder(Modality::Image);
    assert_eq!(enc.in_dim(), 50);
    assert_eq!(enc.out_dim(), 128);
    // Three dense layers: 50 -> 128 -> 128 -> 128.
    let dense_dims: Vec<(usize, usize)> = enc
        .layers()
        .iter()
        .filter_map(|l| match l {
            crate::nn::Layer::Dense(d) => Some((d.in_dim(), d.out_dim())),
            _ => None,
        })
        .collect();
    assert_eq!(dense_dims, vec![(50, 128), (128, 128), (128, 128)]);
    assert_eq!(model.decoder(Modality::Audio).in_dim(), 128);
    assert_eq!(model.decoder(Modality::Audio).out_dim(), 1024);
}

#[test]
fn same_seed_gives_identical_models() {
    let a = mmae_init(toy_config()).unwrap();
    let b = mmae_init(toy_config()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn toy_config_chains_are_consistent() {
    let mut cfg = toy_config();
    cfg.latent_dim = 2;
    let model = mmae_init(cfg).unwrap();
    for m in Modality::ALL {
        assert_eq!(model.encoder(m).out_dim(), 2);
        assert_eq!(model.decoder(m).in_dim(), 2);
        assert_eq!(model.encoder(m).in_dim(), model.decoder(m).out_dim());
    }
}

#[test]
fn zero_final_encoder_layers_collapse_latents() {
    let mut model = mmae_init(toy_config()).unwrap();
    // Zero the final dense layer of every encoder: z = 0 for all inputs.
    for mlp in model.encoders.iter_mut() {
        let last = mlp.layers_mut().len() - 1;
        if let crate::nn::Layer::Dense(d) = &mut mlp.layers_mut()[last] {
            for w in d.weights.data_mut() {
                *w = 0.0;
            }
        }
    }
    let batch = toy_batch(1, 8, (4, 6, 5));
    let trace = model.forward(&batch, Mode::Train).unwrap();
    for m in 0..3 {
        assert!(trace.z[m].data().iter().all(|&v| v == 0.0));
    }
    assert!(trace.z_fused.data().iter().all(|&v| v == 0.0));
}

#[test]
fn single_modality_fusion_selects_that_encoder() {
    let mut cfg = toy_config();
    cfg.fusion = FusionRule::SingleModality(Modality::Image);
    let model = mmae_init(cfg).unwrap();
    let batch = toy_batch(2, 8, (4, 6, 5));
    let trace = model.forward(&batch, Mode::Train).unwrap();
    assert_eq!(trace.z_fused, trace.z[0]);
}

#[test]
fn mean_fusion_matches_external_average() {
    let model = mmae_init(toy_config()).unwrap();
    let batch = toy_batch(3, 8, (4, 6, 5));
    let trace = model.forward(&batch, Mode::Train).unwrap();
    for r in 0..8 {
        for c in 0..3 {
            let mean =
                (trace.z[0].get(r, c) + trace.z[1].get(r, c) + trace.z[2].get(r, c)) / 3.0;
            assert!((trace.z_fused.get(r, c) - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn perfect_reconstruction_gives_zero_rec_terms() {
    let model = mmae_init(toy_config()).unwrap();
    let batch = toy_batch(4, 8, (4, 6, 5));
    let mut trace = model.forward(&batch, Mode::Train).unwrap();
    trace.recon = [batch.image.clone(), batch.audio.clone(), batch.text.clone()];
    let loss = model.loss(&trace, &batch).unwrap();
    assert_eq!(loss.rec_image, 0.0);
    assert_eq!(loss.rec_audio, 0.0);
    assert_eq!(loss.rec_text, 0.0);
    assert_eq!(loss.total, 0.0);
}

#[test]
fn image_only_weights_mask_other_terms() {
    let mut cfg = toy_config();
    cfg.loss_weights = (1.0, 0.0, 0.0);
    let model = mmae_init(cfg).unwrap();
    let batch = toy_batch(5, 8, (4, 6, 5));
    let trace = model.forward(&batch, Mode::Train).unwrap();
    let loss = model.loss(&trace, &batch).unwrap();
    assert_eq!(loss.total, loss.rec_image);
}

#[test]
fn total_is_hand_computed_weighted_sum() {
    let mut cfg = toy_config();
    cfg.loss_weights = (0.7, 1.3, 0.2);
    cfg.alignment_weight = 0.45;
    let model = mmae_init(cfg).unwrap();
    let batch = toy_batch(6, 8, (4, 6, 5));
    let trace = model.forward(&batch, Mode::Train).unwrap();
    let loss = model.loss(&trace, &batch).unwrap();
    let expected =
        0.7 * loss.rec_image + 1.3 * loss.rec_audio + 0.2 * loss.rec_text + 0.45 * loss.align;
    assert!((loss.total - expected).abs() < 1e-12);
}

#[test]
fn scaling_weights_scales_total() {
    let batch = toy_batch(7, 8, (4, 6, 5));
    let total_for = |scale: f64| {
        let mut cfg = toy_config();
        cfg.loss_weights = (0.5 * scale, 1.0 * scale, 1.5 * scale);
        let model = mmae_init(cfg).unwrap();
        let trace = model.forward(&batch, Mode::Train).unwrap();
        model.loss(&trace, &batch).unwrap().total
    };
    let base = total_for(1.0);
    let tripled = total_for(3.0);
    assert!((tripled - 3.0 * base).abs() < 1e-12 * tripled.abs().max(1.0));
}

#[test]
fn joint_gradients_match_finite_differences() {
    let model = mmae_init(toy_config()).unwrap();
    let batch = toy_batch(8, 8, (4, 6, 5));
    let report = mmae_grad_check(&model, &batch, 1e-5, 1e-4).unwrap();
    assert!(
        report.passed(),
        "max_rel_err {} at {}",
        report.max_rel_err,
        report.worst_param
    );
    assert!(report.n_checked > 400);
}

#[test]
fn joint_gradients_with_alignment_match_finite_differences() {
    let mut cfg = toy_config();
    cfg.alignment_weight = 0.3;
    cfg.fusion = FusionRule::SingleModality(Modality::Audio);
    let model = mmae_init(cfg).unwrap();
    let batch = toy_batch(9, 8, (4, 6, 5));
    let report = mmae_grad_check(&model, &batch, 1e-5, 1e-4).unwrap();
    assert!(
        report.passed(),
        "max_rel_err {} at {}",
        report.max_rel_err,
        report.worst_param
    );
}

#[test]
fn training_reduces_loss_on_easy_synthetic_data() {
    let data = toy_dataset(11);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    cfg.latent_dim = 6;
    cfg.hidden = vec![16, 12];
    cfg.batch_size = 25;
    cfg.epochs = 40;
    cfg.lr = 1e-2;
    cfg.seed = 42;
    let model = mmae_init(cfg).unwrap();
    let (_, history) = train(model, &data).unwrap();
    let first = history.epochs.first().unwrap().loss.total;
    let last = history.epochs.last().unwrap().loss.total;
    assert!(
        last < 0.1 * first,
        "loss did not drop enough: {first} -> {last}"
    );
}

#[test]
fn zero_epochs_is_config_error() {
    let data = toy_dataset(12);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    cfg.epochs = 0;
    let model = mmae_init(cfg).unwrap();
    match train(model, &data) {
        Err(e) => assert!(matches!(e.error, Error::Config(_))),
        Ok(_) => panic!("expected config error"),
    }
}

#[test]
fn zero_lr_leaves_parameters_untouched() {
    let data = toy_dataset(13);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    cfg.lr = 0.0;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    let model = mmae_init(cfg).unwrap();
    let before: Vec<Vec<f64>> = model.param_slices().iter().map(|s| s.to_vec()).collect();
    let (trained, _) = train(model, &data).unwrap();
    let after: Vec<Vec<f64>> = trained.param_slices().iter().map(|s| s.to_vec()).collect();
    assert_eq!(before, after);
}

#[test]
fn unimodal_reduction_matches_standalone_autoencoder() {
    // With single-modality fusion and weights selecting only that modality,
    // the model must behave exactly like an ordinary unimodal autoencoder.
    // The standalone autoencoder is trained here with the nn primitives
    // directly, as an independent route.
    let data = toy_dataset(14);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    cfg.fusion = FusionRule::SingleModality(Modality::Image);
    cfg.loss_weights = (1.0, 0.0, 0.0);
    cfg.epochs = 4;
    cfg.batch_size = 16;
    let model = mmae_init(cfg.clone()).unwrap();
    let mut solo_encoder = model.encoder(Modality::Image).clone();
    let mut solo_decoder = model.decoder(Modality::Image).clone();
    let (_, history) = train(model, &data).unwrap();

    // Standalone loop: identical batch schedule, Adam over only these params.
    let shapes: Vec<usize> = solo_encoder
        .param_slices()
        .iter()
        .chain(solo_decoder.param_slices().iter())
        .map(|s| s.len())
        .collect();
    let mut optimizer = AdamState::new(&shapes, AdamHyper::with_lr(cfg.lr));
    let mut per_epoch = Vec::new();
    for epoch in 0..cfg.epochs {
        let batches = batch_iter(&data, cfg.batch_size, true, epoch_seed(cfg.seed, epoch)).unwrap();
        let mut sum = 0.0;
        let mut rows = 0usize;
        for batch in &batches {
            let (z, enc_tape) = solo_encoder.forward_mut(&batch.image, Mode::Train).unwrap();
            let (recon, dec_tape) = solo_decoder.forward_mut(&z, Mode::Train).unwrap();
            let (loss, grad_recon) = crate::nn::mse_loss(&recon, &batch.image).unwrap();
            let (grad_z, dec_grads) = solo_decoder.backward(dec_tape, &grad_recon).unwrap();
            let (_, enc_grads) = solo_encoder.backward(enc_tape, &grad_z).unwrap();
            let grad_slices: Vec<&[f64]> = enc_grads
                .slices()
                .into_iter()
                .chain(dec_grads.slices())
                .collect();
            let mut params: Vec<&mut [f64]> = solo_encoder
                .param_slices_mut()
                .into_iter()
                .chain(solo_decoder.param_slices_mut())
                .collect();
            optimizer.step(&mut params, &grad_slices).unwrap();
            sum += loss * batch.indices.len() as f64;
            rows += batch.indices.len();
        }
        // Same mean arithmetic as the trainer (multiply by reciprocal),
        // so the comparison below can be bitwise.
        per_epoch.push(sum * (1.0 / rows as f64));
    }
    for (record, solo) in history.epochs.iter().zip(&per_epoch) {
        assert_eq!(
            record.loss.total.to_bits(),
            solo.to_bits(),
            "epoch {}: {} vs {solo}",
            record.epoch,
            record.loss.total
        );
    }
}

#[test]
fn embed_fused_is_mean_of_single_sources() {
    let data = toy_dataset(15);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    let model = mmae_init(cfg).unwrap();
    let fused = embed(&model, &data, EmbedSource::Fused).unwrap();
    let image = embed(&model, &data, EmbedSource::Image).unwrap();
    let audio = embed(&model, &data, EmbedSource::Audio).unwrap();
    let text = embed(&model, &data, EmbedSource::Text).unwrap();
    assert_eq!(fused.shape(), (data.n_samples(), 3));
    for r in 0..data.n_samples() {
        for c in 0..3 {
            let mean = (image.get(r, c) + audio.get(r, c) + text.get(r, c)) / 3.0;
            assert!((fused.get(r, c) - mean).abs() < 1e-6);
        }
    }
}

#[test]
fn embed_is_deterministic_and_order_equivariant() {
    let data = toy_dataset(16);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    let model = mmae_init(cfg).unwrap();
    let a = embed(&model, &data, EmbedSource::Fused).unwrap();
    let b = embed(&model, &data, EmbedSource::Fused).unwrap();
    assert_eq!(a, b);
    // Permuting dataset rows permutes embedding rows identically.
    let n = data.n_samples();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Rng::new(9);
    rng.shuffle(&mut perm);
    let permuted = data.select_rows(&perm).unwrap();
    let pe = embed(&model, &permuted, EmbedSource::Fused).unwrap();
    for (dst, &src) in perm.iter().enumerate() {
        assert_eq!(pe.row(dst), a.row(src));
    }
}

#[test]
fn checkpoint_round_trip_preserves_embeddings_bitwise() {
    let data = toy_dataset(17);
    let mut cfg = toy_config();
    cfg.input_dims = (8, 12, 10);
    cfg.epochs = 2;
    cfg.batch_size = 16;
    let model = mmae_init(cfg).unwrap();
    let (trained, _) = train(model, &data).unwrap();
    let dir = std::env::temp_dir().join("trilatent-mmae-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.ckpt");
    save_checkpoint(&trained, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded, trained);
    let a = embed(&trained, &data, EmbedSource::Fused).unwrap();
    let b = embed(&loaded, &data, EmbedSource::Fused).unwrap();
    for (x, y) in a.data().iter().zip(b.data()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn fresh_model_checkpoint_round_trips() {
    let model = mmae_init(toy_config()).unwrap();
    let dir = std::env::temp_dir().join("trilatent-mmae-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fresh.ckpt");
    save_checkpoint(&model, &path).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap(), model);
}

#[test]
fn truncated_checkpoint_is_rejected() {
    let model = mmae_init(toy_config()).unwrap();
    let dir = std::env::temp_dir().join("trilatent-mmae-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("truncated.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 3]).unwrap();
    assert!(matches!(
        load_checkpoint(&path),
        Err(Error::Checkpoint(_))
    ));
}

#[test]
fn mismatched_batch_dims_are_rejected() {
    let model = mmae_init(toy_config()).unwrap();
    let batch = toy_batch(20, 8, (4, 6, 7));
    assert!(matches!(
        model.forward(&batch, Mode::Train),
        Err(Error::Shape(_))
    ));
}
