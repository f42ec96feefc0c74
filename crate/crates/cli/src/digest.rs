//! Content digests for produced artifacts.
//!
//! Every pipeline stage records what it wrote into `files.digest` in its
//! output directory: one `"<fnv1a64-hex>  <filename>"` line per file, sorted
//! by filename, so reruns can be compared at a glance and stale outputs spotted.

use std::collections::BTreeMap;
use std::path::Path;

use trilatent::rng::fnv1a64;
use trilatent::Result;

pub const DIGEST_FILE: &str = "files.digest";

pub fn file_digest(path: &Path) -> Result<u64> {
    Ok(fnv1a64(&std::fs::read(path)?))
}

/// Record digests for `names` (paths relative to `dir`), merging with any
/// existing digest entries.
pub fn record_digests(dir: &Path, names: &[String]) -> Result<()> {
    let digest_path = dir.join(DIGEST_FILE);
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    if digest_path.exists() {
        for line in std::fs::read_to_string(&digest_path)?.lines() {
            if let Some((digest, name)) = line.split_once("  ") {
                entries.insert(name.to_string(), digest.to_string());
            }
        }
    }
    for name in names {
        let digest = file_digest(&dir.join(name))?;
        entries.insert(name.clone(), format!("{digest:016x}"));
    }
    let mut out = String::new();
    for (name, digest) in &entries {
        out.push_str(&format!("{digest}  {name}\n"));
    }
    std::fs::write(&digest_path, out)?;
    Ok(())
}

/// Digest of a canonical config description, stamped into CSV metadata.
pub fn config_digest(description: &str) -> u64 {
    fnv1a64(description.as_bytes())
}
