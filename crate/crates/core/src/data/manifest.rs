//! Dataset manifests.
//!
//! A manifest is a plain `key = value` file binding the per-split array files
//! into one [`TripletDataset`]:
//!
//! ```text
//! split = train
//! n_classes = 10
//! image = train_image.npy
//! audio = train_audio.npy
//! text = train_text.npy
//! labels = train_labels.npy
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Lines
//! starting with `#` are comments.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{npy, FeatureMatrix, Modality, ModalityRegistry, Split, TripletDataset};

/// Parsed manifest contents with paths resolved.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub split: Split,
    pub n_classes: usize,
    pub image: PathBuf,
    pub audio: PathBuf,
    pub text: PathBuf,
    pub labels: PathBuf,
}

/// Parse `key = value` lines into a map, rejecting duplicates.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("line {}: expected `key = value`", line_no + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Format(format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path)?;
    let map = parse_kv(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let required = |key: &str| -> Result<String> {
        map.get(key)
            .cloned()
            .ok_or_else(|| Error::Format(format!("manifest missing key {key:?}")))
    };
    let resolve = |value: String| -> PathBuf {
        let p = PathBuf::from(value);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    Ok(DatasetManifest {
        split: Split::parse(&required("split")?)?,
        n_classes: required("n_classes")?
            .parse()
            .map_err(|_| Error::Format("n_classes is not an integer".into()))?,
        image: resolve(required("image")?),
        audio: resolve(required("audio")?),
        text: resolve(required("text")?),
        labels: resolve(required("labels")?),
    })
}

/// Load the dataset a manifest describes, optionally checking feature
/// dimensions against a registry.
pub fn load_dataset(
    manifest_path: &Path,
    registry: Option<&ModalityRegistry>,
) -> Result<TripletDataset> {
    let manifest = read_manifest(manifest_path)?;
    let load = |path: &Path, modality: Modality| -> Result<FeatureMatrix> {
        let values: Matrix = npy::read_matrix(path)?;
        match registry {
            Some(reg) => FeatureMatrix::with_registry(values, modality, reg),
            None => FeatureMatrix::new(values, modality),
        }
    };
    TripletDataset::new(
        load(&manifest.image, Modality::Image)?,
        load(&manifest.audio, Modality::Audio)?,
        load(&manifest.text, Modality::Text)?,
        npy::read_labels(&manifest.labels)?,
        manifest.split,
        manifest.n_classes,
    )
}

/// Write a dataset's four array files plus its manifest into `dir`.
/// Files are named `<split>_<modality>.npy`; returns the manifest path.
pub fn save_dataset(dataset: &TripletDataset, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let split = dataset.split().name();
    let file = |suffix: &str| format!("{split}_{suffix}.npy");
    npy::write_matrix(&dir.join(file("image")), dataset.image().values())?;
    npy::write_matrix(&dir.join(file("audio")), dataset.audio().values())?;
    npy::write_matrix(&dir.join(file("text")), dataset.text().values())?;
    npy::write_labels(&dir.join(file("labels")), dataset.labels())?;
    let manifest_path = dir.join(format!("{split}.manifest"));
    let body = format!(
        "# dataset manifest\nsplit = {split}\nn_classes = {}\nimage = {}\naudio = {}\ntext = {}\nlabels = {}\n",
        dataset.n_classes(),
        file("image"),
        file("audio"),
        file("text"),
        file("labels"),
    );
    fs::write(&manifest_path, body)?;
    Ok(manifest_path)
}

const STATS_MAGIC: &[u8; 8] = b"TRILSTAT";

/// Write train-fit standardization statistics so later stages can apply them
/// to other splits without refitting.
pub fn save_stats(stats: &super::DatasetStats, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(STATS_MAGIC);
    out.extend_from_slice(&1u32.to_le_bytes());
    for s in [&stats.image, &stats.audio, &stats.text] {
        out.extend_from_slice(&(s.mean.len() as u32).to_le_bytes());
        for &v in &s.mean {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &v in &s.std {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&s.epsilon.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_stats(path: &Path) -> Result<super::DatasetStats> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[..8] != STATS_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a standardization stats file",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != 1 {
        return Err(Error::Format(format!(
            "stats file version {version} is not supported"
        )));
    }
    let mut cursor = 12usize;
    let read_f64 = |bytes: &[u8], cursor: &mut usize| -> Result<f64> {
        let end = *cursor + 8;
        if bytes.len() < end {
            return Err(Error::Format("truncated stats file".into()));
        }
        let v = f64::from_le_bytes(bytes[*cursor..end].try_into().unwrap());
        *cursor = end;
        Ok(v)
    };
    let mut parts = Vec::with_capacity(3);
    for _ in 0..3 {
        if bytes.len() < cursor + 4 {
            return Err(Error::Format("truncated stats file".into()));
        }
        let dim = u32::from_le_bytes(bytes[cursor..cursor + 4].try_into().unwrap()) as usize;
        cursor += 4;
        let mut mean = Vec::with_capacity(dim);
        for _ in 0..dim {
            mean.push(read_f64(&bytes, &mut cursor)?);
        }
        let mut std = Vec::with_capacity(dim);
        for _ in 0..dim {
            std.push(read_f64(&bytes, &mut cursor)?);
        }
        let epsilon = read_f64(&bytes, &mut cursor)?;
        parts.push(super::StandardizeStats { mean, std, epsilon });
    }
    if cursor != bytes.len() {
        return Err(Error::Format("trailing bytes in stats file".into()));
    }
    let text = parts.pop().unwrap();
    let audio = parts.pop().unwrap();
    let image = parts.pop().unwrap();
    Ok(super::DatasetStats { image, audio, text })
}
