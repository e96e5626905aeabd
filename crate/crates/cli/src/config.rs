//! Flat key=value settings: config file first, command-line flags on top.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tfe_core::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Param(format!("config line {}: expected key = value, got {raw:?}", no + 1)))?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(Error::Param(format!("config line {}: empty key", no + 1)));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Param(format!("config line {}: key {k:?} repeated", no + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Param(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

impl Settings {
    pub fn new(values: BTreeMap<String, String>) -> Self {
        Self { values }
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(String::as_str).ok_or_else(|| Error::Param(format!("missing required setting `{key}`")))
    }

    pub fn opt_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, v: &str) -> Result<T> {
        v.trim().parse().map_err(|_| Error::Param(format!("setting `{key}`: cannot parse {v:?}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key, self.str(key)?)?;
        if !v.is_finite() {
            return Err(Error::Param(format!("setting `{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.has(key) {
            self.f64(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key, self.str(key)?)
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key, self.str(key)?)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.str(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::Param(format!("setting `{key}`: expected true or false, got {v:?}"))),
        }
    }

    /// Comma-separated list.
    pub fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.str(key)?.split(',').filter(|s| !s.trim().is_empty()).map(|s| self.parse(key, s)).collect()
    }

    /// Semicolon-separated list of comma-separated integer vectors, e.g. `0,1;2,0`.
    pub fn offsets(&self, key: &str) -> Result<Vec<Vec<i64>>> {
        self.str(key)?
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|g| g.split(',').map(|s| self.parse(key, s)).collect())
            .collect()
    }
}
