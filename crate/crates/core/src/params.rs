//! Flat `key = value` parameter documents.
//!
//! Crop and soil parameter files are TOML documents with a single top-level
//! table of numeric values. Every recognised key must be consumed and every
//! unrecognised key is rejected, so a typo never silently falls back to a
//! default.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug)]
pub(crate) struct FlatDoc {
    values: BTreeMap<String, f64>,
}

impl FlatDoc {
    pub(crate) fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: "<parameters>".into(),
            message: e.message().to_string(),
        })?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            let number = match value {
                toml::Value::Float(f) => f,
                toml::Value::Integer(i) => i as f64,
                other => {
                    return Err(Error::param(
                        key,
                        format!("expected a number, found {}", other.type_str()),
                    ))
                }
            };
            if !number.is_finite() {
                return Err(Error::param(key, "value is not finite"));
            }
            values.insert(key, number);
        }
        Ok(Self { values })
    }

    pub(crate) fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub(crate) fn take(&mut self, key: &str) -> Result<f64> {
        self.values
            .remove(key)
            .ok_or_else(|| Error::param(key, "missing"))
    }

    pub(crate) fn take_or(&mut self, key: &str, default: f64) -> f64 {
        self.values.remove(key).unwrap_or(default)
    }

    /// Fails on the first key that was never taken.
    pub(crate) fn finish(self) -> Result<()> {
        match self.values.into_keys().next() {
            Some(key) => Err(Error::param(key, "unknown key")),
            None => Ok(()),
        }
    }
}

pub(crate) fn ensure(cond: bool, key: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(key, reason))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_promote_to_floats() {
        let mut doc = FlatDoc::parse("a = 3\nb = 2.5").unwrap();
        assert_eq!(doc.take("a").unwrap(), 3.0);
        assert_eq!(doc.take("b").unwrap(), 2.5);
        doc.finish().unwrap();
    }

    #[test]
    fn unknown_and_missing_keys_are_named() {
        let mut doc = FlatDoc::parse("a = 1\ntypo = 2").unwrap();
        let err = doc.take("c").unwrap_err().to_string();
        assert!(err.contains("`c`"), "{err}");
        doc.take("a").unwrap();
        let err = doc.finish().unwrap_err().to_string();
        assert!(err.contains("`typo`"), "{err}");
    }

    #[test]
    fn non_numeric_values_are_rejected() {
        let err = FlatDoc::parse("a = \"x\"").unwrap_err().to_string();
        assert!(err.contains("`a`"), "{err}");
    }
}
