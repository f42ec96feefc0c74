//! Subcommand implementations.

pub mod baseline;
pub mod cluster;
pub mod embed;
pub mod project;
pub mod report;
pub mod synth;
pub mod train;
pub mod verify;

use std::path::{Path, PathBuf};

use trilatent::matrix::Matrix;
use trilatent::{Error, Result};

/// Load a feature/embedding matrix, dispatching on extension: `.csv` goes
/// through the secondary CSV path, everything else through the array loader.
pub(crate) fn read_matrix_any(path: &Path) -> Result<Matrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => trilatent::data::csv::read_matrix_csv(path),
        _ => trilatent::data::npy::read_matrix(path),
    }
}

/// Create the output directory (validation-phase helper).
pub(crate) fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", path.display())))
}

/// Required path argument, with config-file fallback.
pub(crate) fn require_path(
    flag: &Option<PathBuf>,
    config: &crate::config::ConfigFile,
    key: &str,
) -> Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.clone());
    }
    if let Some(raw) = config.raw(key) {
        return Ok(PathBuf::from(raw));
    }
    Err(Error::Config(format!("missing required option --{key}")))
}
