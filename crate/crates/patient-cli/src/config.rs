use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliConfig {
    pub server_url: String,
    pub patient_id: String,
    pub token: String,
}

/// `$XDG_CONFIG_HOME/therapy-patient/config.toml` or the platform equivalent.
pub fn default_path() -> Option<PathBuf> {
    dirs::config_dir().map(|d| d.join("therapy-patient").join("config.toml"))
}

pub fn load(path: &Path) -> Result<CliConfig, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CliError::NotRegistered(path.to_owned())),
        Err(e) => return Err(CliError::Config(format!("{}: {e}", path.display()))),
    };
    let cfg: CliConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    check_url(&cfg.server_url)?;
    if cfg.patient_id.is_empty() {
        return Err(CliError::NotRegistered(path.to_owned()));
    }
    Ok(cfg)
}

pub fn save(path: &Path, cfg: &CliConfig) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Config(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let text = toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    std::fs::write(path, text).map_err(io)
}

pub fn check_url(url: &str) -> Result<(), CliError> {
    let rest = url
        .strip_prefix("http://")
        .or_else(|| url.strip_prefix("https://"))
        .ok_or_else(|| CliError::Usage(format!("server url must start with http:// or https://, got {url:?}")))?;
    if rest.trim_end_matches('/').is_empty() {
        return Err(CliError::Usage(format!("server url {url:?} has no host")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("config.toml");
        let cfg = CliConfig {
            server_url: "http://localhost:9000".into(),
            patient_id: "abc".into(),
            token: "patient:abc".into(),
        };
        save(&path, &cfg).unwrap();
        assert_eq!(load(&path).unwrap(), cfg);
    }

    #[test]
    fn missing_file_means_not_registered() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load(&dir.path().join("none.toml")), Err(CliError::NotRegistered(_))));
    }

    #[test]
    fn url_checks() {
        assert!(check_url("http://h:1").is_ok());
        assert!(check_url("https://h/").is_ok());
        assert!(check_url("ftp://h").is_err());
        assert!(check_url("http://").is_err());
    }
}
