//! Versioned binary serialization of network parameters.
//!
//! Standalone files carry the magic `TRILNN01`; the same payload encoding is
//! embedded inside model checkpoints. The exact byte layout is documented in
//! `docs/formats.md`. All integers and floats are little-endian; loading a
//! file reproduces parameters bit for bit.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::{BatchNormLayer, DenseLayer, Layer, Mlp};

pub const MLP_FILE_MAGIC: &[u8; 8] = b"TRILNN01";

const KIND_DENSE: u8 = 0;
const KIND_BATCHNORM: u8 = 1;
const KIND_RELU: u8 = 2;

pub fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_f64_slice<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for &v in values {
        write_f64(w, v)?;
    }
    Ok(())
}

pub fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("unexpected end of file".into()))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("unexpected end of file".into()))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_f64_vec<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Checkpoint("unexpected end of file".into()))?;
    Ok(buf[0])
}

/// Write one MLP's payload (no magic; used inside larger containers).
pub fn write_mlp<W: Write>(w: &mut W, mlp: &Mlp) -> Result<()> {
    write_u32(w, mlp.in_dim() as u32)?;
    write_u32(w, mlp.out_dim() as u32)?;
    write_u32(w, mlp.layers().len() as u32)?;
    for layer in mlp.layers() {
        match layer {
            Layer::Dense(d) => {
                w.write_all(&[KIND_DENSE])?;
                write_u32(w, d.in_dim() as u32)?;
                write_u32(w, d.out_dim() as u32)?;
                write_f64_slice(w, d.weights.data())?;
                write_f64_slice(w, &d.bias)?;
            }
            Layer::BatchNorm(bn) => {
                w.write_all(&[KIND_BATCHNORM])?;
                write_u32(w, bn.dim() as u32)?;
                write_f64_slice(w, &bn.gamma)?;
                write_f64_slice(w, &bn.beta)?;
                write_f64_slice(w, &bn.running_mean)?;
                write_f64_slice(w, &bn.running_var)?;
                write_f64(w, bn.momentum)?;
                write_f64(w, bn.eps)?;
            }
            Layer::Relu => {
                w.write_all(&[KIND_RELU])?;
            }
        }
    }
    Ok(())
}

/// Read one MLP payload written by [`write_mlp`].
pub fn read_mlp<R: Read>(r: &mut R) -> Result<Mlp> {
    let in_dim = read_u32(r)? as usize;
    let out_dim = read_u32(r)? as usize;
    let layer_count = read_u32(r)? as usize;
    if layer_count > 10_000 {
        return Err(Error::Checkpoint(format!(
            "implausible layer count {layer_count}"
        )));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        match read_u8(r)? {
            KIND_DENSE => {
                let rows = read_u32(r)? as usize;
                let cols = read_u32(r)? as usize;
                let weights = Matrix::from_vec(rows, cols, read_f64_vec(r, rows * cols)?)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?;
                let bias = read_f64_vec(r, cols)?;
                layers.push(Layer::Dense(DenseLayer { weights, bias }));
            }
            KIND_BATCHNORM => {
                let dim = read_u32(r)? as usize;
                layers.push(Layer::BatchNorm(BatchNormLayer {
                    gamma: read_f64_vec(r, dim)?,
                    beta: read_f64_vec(r, dim)?,
                    running_mean: read_f64_vec(r, dim)?,
                    running_var: read_f64_vec(r, dim)?,
                    momentum: read_f64(r)?,
                    eps: read_f64(r)?,
                }));
            }
            KIND_RELU => layers.push(Layer::Relu),
            other => {
                return Err(Error::Checkpoint(format!("unknown layer tag {other}")));
            }
        }
    }
    let mlp = Mlp::from_layers(layers, in_dim, out_dim);
    validate_chain(&mlp)?;
    Ok(mlp)
}

/// Check that adjacent layer dimensions chain correctly.
fn validate_chain(mlp: &Mlp) -> Result<()> {
    let mut current = mlp.in_dim();
    for layer in mlp.layers() {
        match layer {
            Layer::Dense(d) => {
                if d.in_dim() != current {
                    return Err(Error::Checkpoint(format!(
                        "dense layer expects {}-d input, chain provides {current}-d",
                        d.in_dim()
                    )));
                }
                current = d.out_dim();
            }
            Layer::BatchNorm(bn) => {
                if bn.dim() != current {
                    return Err(Error::Checkpoint(format!(
                        "batch norm is {}-d, chain provides {current}-d",
                        bn.dim()
                    )));
                }
            }
            Layer::Relu => {}
        }
    }
    if current != mlp.out_dim() {
        return Err(Error::Checkpoint(format!(
            "chain ends at {current}-d, header says {}-d",
            mlp.out_dim()
        )));
    }
    Ok(())
}

/// Write a standalone parameter file (magic + payload).
pub fn save_mlp(path: &std::path::Path, mlp: &Mlp) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MLP_FILE_MAGIC);
    write_mlp(&mut bytes, mlp)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Read a standalone parameter file written by [`save_mlp`].
pub fn load_mlp(path: &std::path::Path) -> Result<Mlp> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 || &bytes[..8] != MLP_FILE_MAGIC {
        return Err(Error::Checkpoint("bad parameter file magic".into()));
    }
    let mut cursor = &bytes[8..];
    let mlp = read_mlp(&mut cursor)?;
    if !cursor.is_empty() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok(mlp)
}
