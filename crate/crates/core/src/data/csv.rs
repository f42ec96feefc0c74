//! Secondary CSV import/export for feature matrices.
//!
//! Layout: a header row of column indices (`0,1,2,...`), then one sample per
//! line. Loading goes through the same finiteness checks as the array loader.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV file".into()))?;
    let cols = header.split(',').count();
    for (i, field) in header.split(',').enumerate() {
        if field.trim() != i.to_string() {
            return Err(Error::Format(format!(
                "CSV header field {i} is {field:?}, expected {i}"
            )));
        }
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (line_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::Format(format!(
                "line {} has {} fields, expected {cols}",
                line_no + 2,
                fields.len()
            )));
        }
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Format(format!("bad number {field:?} on line {}", line_no + 2))
            })?;
            if !v.is_finite() {
                return Err(Error::Data("CSV contains NaN or Inf".into()));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Format("CSV has a header but no samples".into()));
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn write_matrix_csv(path: &Path, matrix: &Matrix) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..matrix.cols()).map(|c| c.to_string()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..matrix.rows() {
        let row: Vec<String> = matrix.row(r).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("trilatent-csv-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn csv_round_trip() {
        let m = Matrix::from_rows(&[vec![1.0, 2.5], vec![-3.0, 0.125]]).unwrap();
        let path = temp_path("rt.csv");
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bad_header_rejected() {
        let path = temp_path("badheader.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(Error::Format(_))));
    }

    #[test]
    fn ragged_row_rejected() {
        let path = temp_path("ragged.csv");
        fs::write(&path, "0,1\n1,2\n3\n").unwrap();
        assert!(matches!(read_matrix_csv(&path), Err(Error::Format(_))));
    }
}
