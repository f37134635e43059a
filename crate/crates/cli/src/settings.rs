//! Flat `key = value` configuration with command-line overrides.
//!
//! Keys use the long flag names (`n-clusters`, `radius-mm`, ...). Blank
//! lines and lines starting with `#` are ignored. List values are
//! comma-separated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::config(format!("line {}: empty key", n + 1)));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Later values win.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::config(format!("invalid value for {key}: {v:?}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?
            .ok_or_else(|| CliError::config(format!("missing required setting {key}")))
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::config(format!("invalid boolean for {key}: {v:?}"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|_| CliError::config(format!("invalid list item for {key}: {s:?}")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// A path that must exist now.
    pub fn existing_path(&self, key: &str) -> CliResult<PathBuf> {
        let p: PathBuf = self.require(key)?;
        check_exists(&p, key)?;
        Ok(p)
    }

    pub fn existing_paths(&self, key: &str) -> CliResult<Vec<PathBuf>> {
        let paths: Vec<PathBuf> = self
            .list(key)?
            .ok_or_else(|| CliError::config(format!("missing required setting {key}")))?;
        for p in &paths {
            check_exists(p, key)?;
        }
        Ok(paths)
    }
}

fn check_exists(p: &Path, key: &str) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::config(format!("{key}: {} does not exist", p.display())))
    }
}
