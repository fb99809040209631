use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use therapy_core::program::{DEFAULT_MAX_REPEATS, DEFAULT_PASS_THRESHOLD};

pub const ENV_LISTEN: &str = "THERAPY_LISTEN";
pub const ENV_DATA_DIR: &str = "THERAPY_DATA_DIR";
pub const ENV_PASS_THRESHOLD: &str = "THERAPY_PASS_THRESHOLD";
pub const ENV_MAX_REPEATS: &str = "THERAPY_MAX_REPEATS";
pub const ENV_DICTIONARY_SEED: &str = "THERAPY_DICTIONARY_SEED";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// Program threshold for newly registered patients.
    pub pass_threshold: f64,
    pub max_repeats: u32,
    pub session_idle_minutes: i64,
    pub max_upload_bytes: usize,
    /// JSON array of dictionary entries loaded at start-up; entries whose id
    /// is already present are skipped.
    pub dictionary_seed: Option<PathBuf>,
    pub language: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("data"),
            pass_threshold: DEFAULT_PASS_THRESHOLD,
            max_repeats: DEFAULT_MAX_REPEATS,
            session_idle_minutes: 30,
            max_upload_bytes: 20 * 1024 * 1024,
            dictionary_seed: None,
            language: "en".into(),
        }
    }
}

impl Config {
    /// Reads an optional TOML file, then applies `THERAPY_*` overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Config::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get(ENV_LISTEN) {
            self.listen = v.parse().with_context(|| format!("{ENV_LISTEN}={v}"))?;
        }
        if let Some(v) = get(ENV_DATA_DIR) {
            self.data_dir = PathBuf::from(v);
        }
        if let Some(v) = get(ENV_PASS_THRESHOLD) {
            self.pass_threshold = v.parse().with_context(|| format!("{ENV_PASS_THRESHOLD}={v}"))?;
        }
        if let Some(v) = get(ENV_MAX_REPEATS) {
            self.max_repeats = v.parse().with_context(|| format!("{ENV_MAX_REPEATS}={v}"))?;
        }
        if let Some(v) = get(ENV_DICTIONARY_SEED) {
            self.dictionary_seed = Some(PathBuf::from(v));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(
            (0.0..=1.0).contains(&self.pass_threshold),
            "pass_threshold {} outside [0, 1]",
            self.pass_threshold
        );
        anyhow::ensure!(
            (1..=therapy_core::program::MAX_REPEATS_LIMIT).contains(&self.max_repeats),
            "max_repeats {} outside 1..=10",
            self.max_repeats
        );
        anyhow::ensure!(self.session_idle_minutes > 0, "session_idle_minutes must be positive");
        Ok(())
    }
}
