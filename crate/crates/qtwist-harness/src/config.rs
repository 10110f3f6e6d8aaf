//! `key = value` configuration with `QTWIST_*` environment overrides.

use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};

/// Prefix of the environment overrides: `QTWIST_BITS`, `QTWIST_CACHE_DIR`, `QTWIST_WORKERS`.
pub const ENV_PREFIX: &str = "QTWIST_";

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Mantissa bits; `None` picks the per-color default.
    pub bits: Option<u32>,
    pub cache_dir: PathBuf,
    /// Worker threads for per-N evaluations; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self { bits: None, cache_dir: PathBuf::from(".qtwist-cache"), workers: 0 }
    }
}

impl Config {
    /// Defaults, then the file (if any), then the process environment.
    pub fn load(file: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            cfg.apply_text(&text, path)?;
        }
        cfg.apply_env(std::env::vars())?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::Config {
                path: origin.to_path_buf(),
                message: format!("line {}: expected key = value", lineno + 1),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| HarnessError::Config { path: origin.to_path_buf(), message: format!("line {}: {message}", lineno + 1) })?;
        }
        Ok(())
    }

    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        for (k, v) in vars {
            if let Some(key) = k.strip_prefix(ENV_PREFIX) {
                if matches!(key, "BITS" | "CACHE_DIR" | "WORKERS") {
                    self.set(&key.to_ascii_lowercase(), &v)
                        .map_err(|message| HarnessError::Config { path: PathBuf::from(format!("${k}")), message })?;
                }
            }
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "bits" => {
                self.bits = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| format!("bits must be an integer or `auto`, got {value:?}"))?)
                }
            }
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            "workers" => self.workers = value.parse().map_err(|_| format!("workers must be an integer, got {value:?}"))?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Run `f` on a pool with the configured number of workers.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match rayon::ThreadPoolBuilder::new().num_threads(self.workers).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}
