//! Layered run settings: built-in defaults, then a `key = value` config
//! file, then command-line flags.

use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use rumorlab::{Error, KeyValues, ModelSpec};

/// Config keys are matched with `-` and `_` treated alike.
fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

#[derive(Debug, Clone, Default)]
pub struct Settings {
    kv: KeyValues,
}

impl Settings {
    pub fn load(config: Option<&Path>, flags: Vec<(&'static str, Option<String>)>) -> anyhow::Result<Self> {
        let mut kv = KeyValues::default();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))
                .map_err(|e| Error::Config(format!("{e:#}")))?;
            let parsed: KeyValues = text.parse()?;
            for (key, value) in parsed.0 {
                kv.insert(normalize(&key), value);
            }
        }
        for (key, value) in flags {
            if let Some(v) = value {
                kv.insert(normalize(key), v);
            }
        }
        Ok(Self { kv })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        self.kv.parse(&normalize(key))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, Error> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.kv.get(&normalize(key))
    }

    pub fn model(&self) -> Result<ModelSpec, Error> {
        ModelSpec::from_kv(&self.kv)
    }
}

/// Parses `lo:hi`.
pub fn parse_range(text: &str) -> Result<(f64, f64), Error> {
    let bad = || Error::Config(format!("expected `lo:hi`, got `{text}`"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// Parses a comma-separated list, or `start:end:count` for evenly spaced
/// values including both ends.
pub fn parse_values(text: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::Config(format!("cannot parse values `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, end, count] => {
            let start: f64 = start.trim().parse().map_err(|_| bad())?;
            let end: f64 = end.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            if count < 2 {
                return Err(Error::Config(format!("`{text}`: count must be at least 2")));
            }
            (0..count)
                .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                .collect()
        }
        [list] => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}
