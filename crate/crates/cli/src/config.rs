//! Optional run configuration file.
//!
//! ```toml
//! [paths]
//! inventory = "data/inventory.tsv"
//! examples = "data/examples.tsv"
//! corpus = "data/corpus.vert"
//! out_dir = "out"
//!
//! [seeds]
//! split = 42
//! sheets = 7
//!
//! [train]
//! peak_lr = 0.01
//! dim = 4096
//!
//! [sheets]
//! annotators = ["A1", "A2"]
//! set_size = 100
//! url_template = "https://example.org/classes#{class}"
//!
//! [service]
//! port = 8080
//! ```
//!
//! Relative paths are resolved against the directory holding the file.
//! Command-line flags and `LEXEXT_*` environment variables take precedence.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lexext_core::scorer::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub inventory: Option<PathBuf>,
    pub examples: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub design: Option<PathBuf>,
    pub decisions: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub sheets: u64,
    pub simulate: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            split: 42,
            sheets: 7,
            simulate: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SheetParams {
    pub annotators: Vec<String>,
    pub set_size: usize,
    pub url_template: Option<String>,
}

impl Default for SheetParams {
    fn default() -> Self {
        SheetParams {
            annotators: vec!["A1".into(), "A2".into()],
            set_size: lexext_core::sheets::DEFAULT_SET_SIZE,
            url_template: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceParams {
    pub bind: String,
    pub port: u16,
}

impl Default for ServiceParams {
    fn default() -> Self {
        ServiceParams {
            bind: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub seeds: Seeds,
    pub train: TrainConfig,
    pub sheets: SheetParams,
    pub service: ServiceParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg =
            Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.inventory,
            &mut p.examples,
            &mut p.corpus,
            &mut p.truth,
            &mut p.split,
            &mut p.model,
            &mut p.scores,
            &mut p.design,
            &mut p.decisions,
            &mut p.log,
            &mut p.ui_dir,
            &mut p.out_dir,
        ] {
            if let Some(v) = slot.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
