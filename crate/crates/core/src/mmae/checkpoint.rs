//! Versioned binary checkpoints for the full model.
//!
//! Layout (all little-endian, documented in `docs/formats.md`): the magic
//! `TRILMMAE`, a `u32` format version, the config block, then the six
//! networks in fixed order (image/audio/text encoders, then decoders) using
//! the parameter encoding from [`crate::nn::serialize`]. Loading a checkpoint
//! reproduces forward outputs bit for bit.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::data::Modality;
use crate::error::{Error, Result};
use crate::nn::serialize::{
    read_f64, read_mlp, read_u32, write_f64, write_mlp, write_u32,
};

use super::{FusionRule, MmaeConfig, MmaeModel};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TRILMMAE";
pub const CHECKPOINT_VERSION: u32 = 1;

fn write_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("unexpected end of file".into()))?;
    Ok(u64::from_le_bytes(buf))
}

fn write_config(out: &mut Vec<u8>, cfg: &MmaeConfig) -> Result<()> {
    write_u32(out, cfg.latent_dim as u32)?;
    write_u32(out, cfg.hidden.len() as u32)?;
    for &h in &cfg.hidden {
        write_u32(out, h as u32)?;
    }
    write_u32(out, cfg.input_dims.0 as u32)?;
    write_u32(out, cfg.input_dims.1 as u32)?;
    write_u32(out, cfg.input_dims.2 as u32)?;
    write_f64(out, cfg.loss_weights.0)?;
    write_f64(out, cfg.loss_weights.1)?;
    write_f64(out, cfg.loss_weights.2)?;
    match cfg.fusion {
        FusionRule::Mean => out.push(0),
        FusionRule::SingleModality(m) => {
            out.push(1);
            out.push(match m {
                Modality::Image => 0,
                Modality::Audio => 1,
                Modality::Text => 2,
            });
        }
    }
    write_f64(out, cfg.alignment_weight)?;
    write_f64(out, cfg.lr)?;
    write_u32(out, cfg.batch_size as u32)?;
    write_u32(out, cfg.epochs as u32)?;
    write_u64(out, cfg.seed);
    Ok(())
}

fn read_config<R: Read>(r: &mut R) -> Result<MmaeConfig> {
    let latent_dim = read_u32(r)? as usize;
    let hidden_len = read_u32(r)? as usize;
    if hidden_len > 1000 {
        return Err(Error::Checkpoint(format!(
            "implausible hidden layer count {hidden_len}"
        )));
    }
    let mut hidden = Vec::with_capacity(hidden_len);
    for _ in 0..hidden_len {
        hidden.push(read_u32(r)? as usize);
    }
    let input_dims = (
        read_u32(r)? as usize,
        read_u32(r)? as usize,
        read_u32(r)? as usize,
    );
    let loss_weights = (read_f64(r)?, read_f64(r)?, read_f64(r)?);
    let mut tag = [0u8; 1];
    r.read_exact(&mut tag)
        .map_err(|_| Error::Checkpoint("unexpected end of file".into()))?;
    let fusion = match tag[0] {
        0 => FusionRule::Mean,
        1 => {
            let mut which = [0u8; 1];
            r.read_exact(&mut which)
                .map_err(|_| Error::Checkpoint("unexpected end of file".into()))?;
            let m = match which[0] {
                0 => Modality::Image,
                1 => Modality::Audio,
                2 => Modality::Text,
                other => {
                    return Err(Error::Checkpoint(format!("bad modality tag {other}")));
                }
            };
            FusionRule::SingleModality(m)
        }
        other => return Err(Error::Checkpoint(format!("bad fusion tag {other}"))),
    };
    Ok(MmaeConfig {
        latent_dim,
        hidden,
        input_dims,
        loss_weights,
        fusion,
        alignment_weight: read_f64(r)?,
        lr: read_f64(r)?,
        batch_size: read_u32(r)? as usize,
        epochs: read_u32(r)? as usize,
        seed: read_u64(r)?,
    })
}

pub fn save_checkpoint(model: &MmaeModel, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    write_u32(&mut out, CHECKPOINT_VERSION)?;
    write_config(&mut out, model.config())?;
    for m in Modality::ALL {
        write_mlp(&mut out, model.encoder(m))?;
    }
    for m in Modality::ALL {
        write_mlp(&mut out, model.decoder(m))?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MmaeModel> {
    let bytes = fs::read(path)?;
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!(
            "{} is not a model checkpoint",
            path.display()
        )));
    }
    let mut cursor = &bytes[8..];
    let version = read_u32(&mut cursor)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )));
    }
    let config = read_config(&mut cursor)?;
    let mut networks = Vec::with_capacity(6);
    for _ in 0..6 {
        networks.push(read_mlp(&mut cursor)?);
    }
    if !cursor.is_empty() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    let dec_text = networks.pop().unwrap();
    let dec_audio = networks.pop().unwrap();
    let dec_image = networks.pop().unwrap();
    let enc_text = networks.pop().unwrap();
    let enc_audio = networks.pop().unwrap();
    let enc_image = networks.pop().unwrap();
    MmaeModel::from_parts(
        [enc_image, enc_audio, enc_text],
        [dec_image, dec_audio, dec_text],
        config,
    )
    .map_err(|e| Error::Checkpoint(e.to_string()))
}
