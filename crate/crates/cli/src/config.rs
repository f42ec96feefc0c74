//! Run configuration: an optional `key = value` file merged under
//! command-line flags (flags win).

use std::collections::BTreeMap;
use std::path::Path;

use trilatent::data::manifest::parse_kv;
use trilatent::{Error, Result};

/// Values loaded from `--config`; consulted for any flag left unset.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let values = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                parse_kv(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(ConfigFile { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else config-file value, else default.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Config(format!("config key {key} has invalid value {raw:?}"))),
            None => Ok(default),
        }
    }

    /// As [`resolve`](Self::resolve) but without a default.
    pub fn resolve_opt<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>> {
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key} has invalid value {raw:?}"))),
            None => Ok(None),
        }
    }
}

/// Parse `a,b,c` into a list of T.
pub fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad {what} entry {part:?}")))
        })
        .collect()
}

/// Parse `a,b,c` into exactly three values.
pub fn parse_triple<T: std::str::FromStr + Copy>(raw: &str, what: &str) -> Result<(T, T, T)> {
    let items: Vec<T> = parse_list(raw, what)?;
    if items.len() != 3 {
        return Err(Error::Config(format!(
            "{what} needs exactly 3 comma-separated values, got {}",
            items.len()
        )));
    }
    Ok((items[0], items[1], items[2]))
}
