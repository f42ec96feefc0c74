//! Aligned multimodal feature datasets: loading, validation, standardization,
//! batching, and synthetic data for desk-scale experiments.

pub mod csv;
pub mod manifest;
pub mod npy;

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, Rng};

/// Std entries below this are treated as constant columns and left unscaled.
pub const STD_EPSILON: f64 = 1e-12;

/// One input channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Image,
    Audio,
    Text,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Image, Modality::Audio, Modality::Text];

    pub fn name(&self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Audio => "audio",
            Modality::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Result<Modality> {
        match s {
            "image" => Ok(Modality::Image),
            "audio" => Ok(Modality::Audio),
            "text" => Ok(Modality::Text),
            other => Err(Error::Config(format!("unknown modality {other:?}"))),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dataset split tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
    Ood,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Ood => "ood",
        }
    }

    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "ood" => Ok(Split::Ood),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Expected feature dimension per modality. `None` disables the check.
#[derive(Debug, Clone, Copy)]
pub struct ModalityRegistry {
    pub image: usize,
    pub audio: usize,
    pub text: usize,
}

impl Default for ModalityRegistry {
    /// The dimensions used throughout the bundled experiments.
    fn default() -> Self {
        ModalityRegistry {
            image: 50,
            audio: 1024,
            text: 768,
        }
    }
}

impl ModalityRegistry {
    pub fn dim(&self, modality: Modality) -> usize {
        match modality {
            Modality::Image => self.image,
            Modality::Audio => self.audio,
            Modality::Text => self.text,
        }
    }
}

/// Dense per-sample feature vectors for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix,
    modality: Modality,
}

impl FeatureMatrix {
    /// All entries must be finite and the matrix non-empty.
    pub fn new(values: Matrix, modality: Modality) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Data(format!(
                "{modality} feature matrix is empty ({}x{})",
                values.rows(),
                values.cols()
            )));
        }
        if !values.is_finite() {
            return Err(Error::Data(format!(
                "{modality} feature matrix has NaN or Inf entries"
            )));
        }
        Ok(FeatureMatrix { values, modality })
    }

    /// As [`new`](Self::new), additionally checking the dimension registry.
    pub fn with_registry(
        values: Matrix,
        modality: Modality,
        registry: &ModalityRegistry,
    ) -> Result<Self> {
        let expected = registry.dim(modality);
        if values.cols() != expected {
            return Err(Error::Shape(format!(
                "{modality} features are {}-d, registry expects {expected}-d",
                values.cols()
            )));
        }
        FeatureMatrix::new(values, modality)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }
}

/// Per-column standardization statistics fit on one feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizeStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub epsilon: f64,
}

/// Fit per-column mean and population std. Columns with std below
/// `STD_EPSILON` are recorded with std 1 so they pass through unscaled.
pub fn standardize_fit(m: &FeatureMatrix) -> Result<StandardizeStats> {
    if m.n_samples() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 samples, got {}",
            m.n_samples()
        )));
    }
    let mean = m.values.column_means();
    let std = m
        .values
        .column_variances()
        .into_iter()
        .map(|v| {
            let s = v.sqrt();
            if s < STD_EPSILON {
                1.0
            } else {
                s
            }
        })
        .collect();
    Ok(StandardizeStats {
        mean,
        std,
        epsilon: STD_EPSILON,
    })
}

/// Apply `(x - mean) / std` columnwise. Stats fit on the training split are
/// reused verbatim for test/OOD data.
pub fn standardize_apply(m: &FeatureMatrix, stats: &StandardizeStats) -> Result<FeatureMatrix> {
    if m.dim() != stats.mean.len() {
        return Err(Error::Shape(format!(
            "stats are {}-d, matrix is {}-d",
            stats.mean.len(),
            m.dim()
        )));
    }
    let mut out = m.values.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for ((v, &mu), &sd) in row.iter_mut().zip(&stats.mean).zip(&stats.std) {
            *v = (*v - mu) / sd;
        }
    }
    FeatureMatrix::new(out, m.modality)
}

/// Aligned (image, audio, text) features plus integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletDataset {
    image: FeatureMatrix,
    audio: FeatureMatrix,
    text: FeatureMatrix,
    labels: Vec<i64>,
    split: Split,
    n_classes: usize,
}

impl TripletDataset {
    /// Fails (never truncates) when the three matrices disagree on row count
    /// or the labels fall outside `[0, n_classes)`.
    pub fn new(
        image: FeatureMatrix,
        audio: FeatureMatrix,
        text: FeatureMatrix,
        labels: Vec<i64>,
        split: Split,
        n_classes: usize,
    ) -> Result<Self> {
        let n = image.n_samples();
        if audio.n_samples() != n || text.n_samples() != n {
            return Err(Error::Alignment(format!(
                "row counts differ: image {n}, audio {}, text {}",
                audio.n_samples(),
                text.n_samples()
            )));
        }
        if labels.len() != n {
            return Err(Error::Alignment(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if n_classes == 0 {
            return Err(Error::Config("n_classes must be positive".into()));
        }
        if let Some(&bad) = labels
            .iter()
            .find(|&&l| l < 0 || l >= n_classes as i64)
        {
            return Err(Error::Data(format!(
                "label {bad} outside [0, {n_classes})"
            )));
        }
        Ok(TripletDataset {
            image,
            audio,
            text,
            labels,
            split,
            n_classes,
        })
    }

    pub fn modality(&self, m: Modality) -> &FeatureMatrix {
        match m {
            Modality::Image => &self.image,
            Modality::Audio => &self.audio,
            Modality::Text => &self.text,
        }
    }

    pub fn image(&self) -> &FeatureMatrix {
        &self.image
    }

    pub fn audio(&self) -> &FeatureMatrix {
        &self.audio
    }

    pub fn text(&self) -> &FeatureMatrix {
        &self.text
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_samples(&self) -> usize {
        self.image.n_samples()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.image.dim(), self.audio.dim(), self.text.dim())
    }

    /// Copy of this dataset with rows reordered by `indices`.
    pub fn select_rows(&self, indices: &[usize]) -> Result<TripletDataset> {
        let pick = |fm: &FeatureMatrix| {
            FeatureMatrix::new(fm.values.select_rows(indices), fm.modality)
        };
        TripletDataset::new(
            pick(&self.image)?,
            pick(&self.audio)?,
            pick(&self.text)?,
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.split,
            self.n_classes,
        )
    }
}

/// Standardization stats for all three modalities, fit on one (train) split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub image: StandardizeStats,
    pub audio: StandardizeStats,
    pub text: StandardizeStats,
}

impl DatasetStats {
    pub fn fit(dataset: &TripletDataset) -> Result<Self> {
        Ok(DatasetStats {
            image: standardize_fit(&dataset.image)?,
            audio: standardize_fit(&dataset.audio)?,
            text: standardize_fit(&dataset.text)?,
        })
    }

    pub fn apply(&self, dataset: &TripletDataset) -> Result<TripletDataset> {
        TripletDataset::new(
            standardize_apply(&dataset.image, &self.image)?,
            standardize_apply(&dataset.audio, &self.audio)?,
            standardize_apply(&dataset.text, &self.text)?,
            dataset.labels.clone(),
            dataset.split,
            dataset.n_classes,
        )
    }
}

/// Recipe for a synthetic aligned dataset shaped like real extracted
/// features.
///
/// Per class, one centroid is drawn for each modality (coordinate standard
/// deviation `kappa * class_separation / sqrt(dim)`, so inter-centroid
/// distance scales with `class_separation` independent of dimension). Each
/// sample is its class centroid plus noise scaled by `noise_sigma`, and the
/// noise has two parts:
///
/// - an isotropic residual, standard deviation `noise_sigma` per coordinate;
/// - for wide modalities (64 columns and up), structured nuisance variation:
///   one random direction per 48 columns, with per-sample coefficients whose
///   per-column variance dwarfs the residual. This imitates the non-semantic
///   factors (speaker, session, phrasing) that dominate real audio/text
///   embeddings: they make those modalities weak for direct class clustering
///   while remaining fully reconstructable by a trained model.
///
/// The image slot is generated with a larger `kappa` (compact,
/// class-discriminative features, like classifier logits), audio and text
/// with a smaller one. With `noise_sigma = 0` every sample equals its class
/// centroid exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub dims: (usize, usize, usize),
    pub class_separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Centroid-scale multiplier per modality slot (image, audio, text).
const SYNTH_KAPPA: [f64; 3] = [4.0, 1.0, 1.0];
/// Modalities at least this wide receive structured nuisance factors.
const SYNTH_FACTOR_MIN_DIM: usize = 64;
/// One nuisance factor per this many columns.
const SYNTH_FACTOR_PER_COLS: usize = 48;
/// Ratio of per-column nuisance variance to residual variance.
const SYNTH_FACTOR_STRENGTH: f64 = 300.0;

fn synth_factor_count(dim: usize) -> usize {
    if dim >= SYNTH_FACTOR_MIN_DIM {
        dim / SYNTH_FACTOR_PER_COLS
    } else {
        0
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Config("n_classes must be >= 2".into()));
        }
        if self.samples_per_class == 0 {
            return Err(Error::Config("samples_per_class must be >= 1".into()));
        }
        let (di, da, dt) = self.dims;
        if di == 0 || da == 0 || dt == 0 {
            return Err(Error::Config("all modality dims must be positive".into()));
        }
        if !self.class_separation.is_finite() || self.class_separation <= 0.0 {
            return Err(Error::Config("class_separation must be finite and > 0".into()));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

const CENTROID_STREAM: u64 = 0x43454e54; // "CENT"

fn split_stream_tag(split: Split) -> u64 {
    match split {
        Split::Train => 0x0001_7261,
        Split::Test => 0x0002_7465,
        Split::Ood => 0x0003_6f6f,
    }
}

/// Generate an aligned synthetic dataset.
///
/// Centroids depend only on `spec.seed`, so different splits of the same spec
/// share class structure while drawing independent noise.
pub fn synth_triplets(spec: &SynthSpec, split: Split) -> Result<TripletDataset> {
    spec.validate()?;
    let dims = [spec.dims.0, spec.dims.1, spec.dims.2];

    // Class structure: one stream, consumed in a fixed order (per class the
    // three modality centroids, then per modality the factor directions).
    let mut centroid_rng = Rng::derive(spec.seed, CENTROID_STREAM);
    let mut centroids: Vec<[Vec<f64>; 3]> = Vec::with_capacity(spec.n_classes);
    for _class in 0..spec.n_classes {
        let mut per_modality: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (slot, (&dim, &kappa)) in per_modality.iter_mut().zip(dims.iter().zip(&SYNTH_KAPPA)) {
            let scale = kappa * spec.class_separation / (dim as f64).sqrt();
            *slot = (0..dim).map(|_| centroid_rng.next_normal() * scale).collect();
        }
        centroids.push(per_modality);
    }
    // Nuisance factor directions (unit vectors), per modality, shared by
    // all classes. Narrow modalities are untouched.
    let mut factor_dirs: [Vec<Vec<f64>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (slot, &dim) in factor_dirs.iter_mut().zip(&dims) {
        for _ in 0..synth_factor_count(dim) {
            let mut direction: Vec<f64> =
                (0..dim).map(|_| centroid_rng.next_normal()).collect();
            let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut direction {
                    *v /= norm;
                }
            }
            slot.push(direction);
        }
    }

    let n = spec.n_classes * spec.samples_per_class;
    let mut noise_rng = Rng::derive(spec.seed, split_stream_tag(split));
    let mut mats = [
        Matrix::zeros(n, dims[0]),
        Matrix::zeros(n, dims[1]),
        Matrix::zeros(n, dims[2]),
    ];
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for class in 0..spec.n_classes {
        for _ in 0..spec.samples_per_class {
            for (m, mat) in mats.iter_mut().enumerate() {
                let centroid = &centroids[class][m];
                let dim = dims[m];
                let out = mat.row_mut(row);
                for (o, &c) in out.iter_mut().zip(centroid) {
                    *o = c + spec.noise_sigma * noise_rng.next_normal();
                }
                // Structured nuisance: per-column variance totals
                // SYNTH_FACTOR_STRENGTH * noise_sigma^2.
                let q = factor_dirs[m].len();
                if q > 0 {
                    let coeff_sd = spec.noise_sigma
                        * (dim as f64 * SYNTH_FACTOR_STRENGTH / q as f64).sqrt();
                    for factor in &factor_dirs[m] {
                        let amplitude = coeff_sd * noise_rng.next_normal();
                        for (o, &f) in out.iter_mut().zip(factor) {
                            *o += amplitude * f;
                        }
                    }
                }
            }
            labels.push(class as i64);
            row += 1;
        }
    }

    let [img, aud, txt] = mats;
    TripletDataset::new(
        FeatureMatrix::new(img, Modality::Image)?,
        FeatureMatrix::new(aud, Modality::Audio)?,
        FeatureMatrix::new(txt, Modality::Text)?,
        labels,
        split,
        spec.n_classes,
    )
}

/// One mini-batch of aligned rows.
#[derive(Debug, Clone)]
pub struct TripletBatch {
    pub image: Matrix,
    pub audio: Matrix,
    pub text: Matrix,
    pub labels: Vec<i64>,
    /// Source row indices, in batch order.
    pub indices: Vec<usize>,
}

/// Iterate mini-batches covering every row exactly once. The shuffle
/// permutation is a pure function of `seed`; callers wanting a fresh
/// permutation per epoch derive the seed with [`epoch_seed`].
pub fn batch_iter(
    dataset: &TripletDataset,
    batch_size: usize,
    shuffle: bool,
    seed: u64,
) -> Result<Vec<TripletBatch>> {
    if dataset.n_samples() == 0 {
        return Err(Error::EmptyDataset("cannot batch an empty dataset".into()));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let n = dataset.n_samples();
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        let mut rng = Rng::new(seed);
        rng.shuffle(&mut order);
    }
    let mut batches = Vec::with_capacity(n.div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        batches.push(TripletBatch {
            image: dataset.image.values.select_rows(chunk),
            audio: dataset.audio.values.select_rows(chunk),
            text: dataset.text.values.select_rows(chunk),
            labels: chunk.iter().map(|&i| dataset.labels[i]).collect(),
            indices: chunk.to_vec(),
        });
    }
    Ok(batches)
}

/// Shuffle seed for one epoch of one run.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    derive_seed(seed, 0x4550_0000 ^ epoch as u64)
}
