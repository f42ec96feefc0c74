//! Reader/writer for the array interchange format.
//!
//! Only the subset the pipeline needs is supported: version 1.0 files with a
//! little-endian C-order payload, either a 2-D float array (`<f4` / `<f8`) or
//! a 1-D `<i8` label vector. Anything else is rejected rather than guessed at.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, PartialEq)]
struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

fn parse_header_bytes(bytes: &[u8]) -> Result<(Header, usize)> {
    if bytes.len() < 10 {
        return Err(Error::Format("file shorter than an array header".into()));
    }
    if &bytes[..6] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if major != 1 {
        return Err(Error::Format(format!(
            "unsupported format version {major}.{minor}"
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let header_end = 10 + header_len;
    if bytes.len() < header_end {
        return Err(Error::Format("truncated header".into()));
    }
    let text = std::str::from_utf8(&bytes[10..header_end])
        .map_err(|_| Error::Format("header is not valid UTF-8".into()))?;
    Ok((parse_header_dict(text)?, header_end))
}

/// Parse the `{'descr': ..., 'fortran_order': ..., 'shape': ...}` dict.
fn parse_header_dict(text: &str) -> Result<Header> {
    let descr = extract_quoted(text, "descr")?;
    let fortran_order = match extract_raw(text, "fortran_order")? {
        v if v.starts_with("True") => true,
        v if v.starts_with("False") => false,
        other => {
            return Err(Error::Format(format!(
                "fortran_order must be True or False, got {other:?}"
            )))
        }
    };
    let shape_src = extract_raw(text, "shape")?;
    if !shape_src.starts_with('(') {
        return Err(Error::Format("shape is not a tuple".into()));
    }
    let close = shape_src
        .find(')')
        .ok_or_else(|| Error::Format("unterminated shape tuple".into()))?;
    let mut shape = Vec::new();
    for part in shape_src[1..close].split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let dim: usize = part
            .parse()
            .map_err(|_| Error::Format(format!("bad shape entry {part:?}")))?;
        shape.push(dim);
    }
    Ok(Header {
        descr,
        fortran_order,
        shape,
    })
}

fn extract_quoted(text: &str, key: &str) -> Result<String> {
    let raw = extract_raw(text, key)?;
    let mut chars = raw.chars();
    let quote = chars.next();
    if quote != Some('\'') && quote != Some('"') {
        return Err(Error::Format(format!("{key} value is not quoted")));
    }
    let quote = quote.unwrap();
    let rest: String = chars.take_while(|&c| c != quote).collect();
    Ok(rest)
}

/// Return the text following `'key':`, trimmed of leading whitespace.
fn extract_raw<'a>(text: &'a str, key: &str) -> Result<&'a str> {
    let pattern = format!("'{key}'");
    let start = text
        .find(&pattern)
        .ok_or_else(|| Error::Format(format!("header missing key {key:?}")))?;
    let after = &text[start + pattern.len()..];
    let colon = after
        .find(':')
        .ok_or_else(|| Error::Format(format!("no value for key {key:?}")))?;
    Ok(after[colon + 1..].trim_start())
}

fn header_bytes(descr: &str, shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape.len() {
        1 => format!("({},)", shape[0]),
        _ => {
            let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            format!("({})", parts.join(", "))
        }
    };
    let dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}");
    // Pad so magic + version + length + header is a multiple of 64, ending in \n.
    let unpadded = 10 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let mut out = Vec::with_capacity(unpadded + padding);
    out.extend_from_slice(MAGIC);
    out.push(1);
    out.push(0);
    let header_len = (dict.len() + padding + 1) as u16;
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', padding));
    out.push(b'\n');
    out
}

/// Read a 2-D little-endian float array. NaN/Inf entries are rejected.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path)?;
    let (header, payload_start) = parse_header_bytes(&bytes)?;
    if header.fortran_order {
        return Err(Error::UnsupportedArray("Fortran-order payload".into()));
    }
    if header.shape.len() != 2 {
        return Err(Error::UnsupportedArray(format!(
            "expected a 2-D array, got {}-D",
            header.shape.len()
        )));
    }
    let (rows, cols) = (header.shape[0], header.shape[1]);
    let n = rows * cols;
    let payload = &bytes[payload_start..];
    let values: Vec<f64> = match header.descr.as_str() {
        "<f8" => {
            expect_len(payload, n * 8)?;
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        }
        "<f4" => {
            expect_len(payload, n * 4)?;
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
                .collect()
        }
        other => {
            return Err(Error::UnsupportedArray(format!(
                "descr {other:?} is not a little-endian float"
            )))
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "{} contains NaN or Inf entries",
            path.display()
        )));
    }
    Matrix::from_vec(rows, cols, values)
}

/// Write a matrix as a version 1.0 `<f8` array.
pub fn write_matrix(path: &Path, matrix: &Matrix) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&header_bytes("<f8", &[matrix.rows(), matrix.cols()]))?;
    for v in matrix.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a 1-D `<i8` label vector.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let bytes = fs::read(path)?;
    let (header, payload_start) = parse_header_bytes(&bytes)?;
    if header.fortran_order {
        return Err(Error::UnsupportedArray("Fortran-order payload".into()));
    }
    if header.shape.len() != 1 {
        return Err(Error::UnsupportedArray(format!(
            "expected a 1-D label vector, got {}-D",
            header.shape.len()
        )));
    }
    if header.descr != "<i8" {
        return Err(Error::UnsupportedArray(format!(
            "label descr {:?} is not '<i8'",
            header.descr
        )));
    }
    let n = header.shape[0];
    let payload = &bytes[payload_start..];
    expect_len(payload, n * 8)?;
    Ok(payload
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Write labels as a version 1.0 1-D `<i8` array.
pub fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(&header_bytes("<i8", &[labels.len()]))?;
    for v in labels {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn expect_len(payload: &[u8], expected: usize) -> Result<()> {
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use std::path::PathBuf;

    fn temp_path(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("trilatent-npy-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let mut rng = Rng::new(99);
        let data: Vec<f64> = (0..15).map(|_| rng.next_normal()).collect();
        let m = Matrix::from_vec(3, 5, data).unwrap();
        let path = temp_path("roundtrip.npy");
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.shape(), (3, 5));
        for (a, b) in m.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // Writing the read-back matrix reproduces the file byte for byte.
        let path2 = temp_path("roundtrip2.npy");
        write_matrix(&path2, &back).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn zeros_round_trip() {
        let m = Matrix::zeros(2, 2);
        let path = temp_path("zeros.npy");
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.shape(), (2, 2));
        assert!(back.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn large_shape_header() {
        let m = Matrix::zeros(4200, 50);
        let path = temp_path("large.npy");
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.shape(), (4200, 50));
    }

    #[test]
    fn bad_magic_is_format_error() {
        let path = temp_path("badmagic.npy");
        fs::write(&path, b"\x93NUMPZ\x01\x00garbage").unwrap();
        match read_matrix(&path) {
            Err(Error::Format(_)) => {}
            other => panic!("expected Format error, got {other:?}"),
        }
    }

    #[test]
    fn non_2d_is_unsupported() {
        let path = temp_path("labels_as_matrix.npy");
        write_labels(&path, &[1, 2, 3]).unwrap();
        match read_matrix(&path) {
            Err(Error::UnsupportedArray(_)) => {}
            other => panic!("expected UnsupportedArray, got {other:?}"),
        }
    }

    #[test]
    fn integer_matrix_is_unsupported() {
        // Hand-build a 2-D '<i8' file; the matrix reader must refuse it.
        let mut bytes = header_bytes("<i8", &[2, 2]);
        for v in [1i64, 2, 3, 4] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = temp_path("intmatrix.npy");
        fs::write(&path, bytes).unwrap();
        match read_matrix(&path) {
            Err(Error::UnsupportedArray(_)) => {}
            other => panic!("expected UnsupportedArray, got {other:?}"),
        }
    }

    #[test]
    fn nan_payload_is_data_error() {
        let mut bytes = header_bytes("<f8", &[1, 2]);
        bytes.extend_from_slice(&f64::NAN.to_le_bytes());
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        let path = temp_path("nan.npy");
        fs::write(&path, bytes).unwrap();
        match read_matrix(&path) {
            Err(Error::Data(_)) => {}
            other => panic!("expected Data error, got {other:?}"),
        }
    }

    #[test]
    fn f4_payload_reads() {
        let mut bytes = header_bytes("<f4", &[2, 2]);
        for v in [1.5f32, -2.0, 0.25, 8.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = temp_path("f4.npy");
        fs::write(&path, bytes).unwrap();
        let m = read_matrix(&path).unwrap();
        assert_eq!(m.data(), &[1.5, -2.0, 0.25, 8.0]);
    }

    #[test]
    fn labels_round_trip() {
        let path = temp_path("labels.npy");
        let labels = vec![0i64, 3, 1, 2, 2];
        write_labels(&path, &labels).unwrap();
        assert_eq!(read_labels(&path).unwrap(), labels);
    }

    #[test]
    fn truncated_payload_is_format_error() {
        let mut bytes = header_bytes("<f8", &[2, 2]);
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        let path = temp_path("short.npy");
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::Format(_))));
    }
}
