use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;

/// Service settings, read from a TOML file:
///
/// ```toml
/// design = "out/design.json"
/// log = "out/decisions.jsonl"
/// ui_dir = "ui/dist"
/// bind = "127.0.0.1"
/// port = 8080
/// ```
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub design: PathBuf,
    pub log: PathBuf,
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

fn default_port() -> u16 {
    8080
}

impl ServiceConfig {
    pub fn new(design: PathBuf, log: PathBuf) -> Self {
        ServiceConfig {
            design,
            log,
            ui_dir: None,
            bind: default_bind(),
            port: default_port(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.design);
        resolve(&mut cfg.log);
        if let Some(ui) = cfg.ui_dir.as_mut() {
            resolve(ui);
        }
        Ok(cfg)
    }
}
