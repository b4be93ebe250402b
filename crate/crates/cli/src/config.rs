//! key=value configuration files, merged under command-line flags.
//!
//! Keys mirror the long flag names; '#' starts a comment. Unknown keys are
//! rejected so typos fail loudly. Flags always win over file values.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use wordrank_core::{Error, Result};

/// Every recognized key; one entry per long flag across all subcommands.
pub const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "vocab",
    "cooccur",
    "model",
    "dataset",
    "out",
    "cap",
    "min-count",
    "window",
    "shard-mb",
    "rho",
    "t",
    "alpha",
    "beta",
    "loss",
    "x-max",
    "epsilon",
    "dim",
    "eta",
    "outer",
    "passes",
    "workers",
    "seed",
    "weights",
    "block-rows",
    "log",
    "mode",
    "method",
    "word",
    "n",
    "syntactic-prefix",
    "header",
];

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key {key:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Flag value if given, else the file value, else the default.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        debug_assert!(KNOWN_KEYS.contains(&key), "unlisted key {key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("bad value {raw:?} for {key}"))),
            None => Ok(None),
        }
    }

    /// Flag value, file value, or an error naming the missing key.
    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.resolve_opt(flag, key)?
            .ok_or_else(|| Error::Config(format!("--{key} is required (flag or config file)")))
    }
}
