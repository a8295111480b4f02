//! Flat `key = value` run configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::Failure;

/// Every key a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "dataset",
    "input",
    "server",
    "query",
    "page_size",
    "start",
    "user",
    "password_env",
    "rate_limit",
    "subsystem_rule",
    "bots",
    "instances",
    "variables",
    "where",
    "high_ratio",
    "spline_dof",
    "cluster_threshold",
    "r2_threshold",
    "iterations",
    "seed",
    "threshold",
    "grid_size",
    "bin_width",
    "as_of",
    "model",
    "out",
    "jobs",
];

/// Keys that do not change any result and so stay out of the provenance hash.
const UNHASHED: &[&str] = &["out", "jobs", "user", "password_env"];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::input(format!("{origin}:{}: expected key = value", n + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Failure::input(format!("{origin}:{}: unknown key {key:?}", n + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(RunConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    /// Command-line values win over the file.
    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered key {key}");
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, Failure>
    where
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Failure::input(format!("invalid {key} {v:?}: {e}"))),
        }
    }

    pub fn require(&self, key: &str) -> Result<&str, Failure> {
        self.raw(key).ok_or_else(|| Failure::input(format!("missing setting {key:?} (flag --{} or config key)", key.replace('_', "-"))))
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out").unwrap_or("out"))
    }

    /// `key` when set, otherwise `name` inside the output directory.
    pub fn path_or_out(&self, key: &str, name: &str) -> PathBuf {
        self.raw(key).map(PathBuf::from).unwrap_or_else(|| self.out_dir().join(name))
    }

    /// SHA-256 over the result-relevant settings, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.values.iter().filter(|(k, _)| !UNHASHED.contains(&k.as_str())) {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
