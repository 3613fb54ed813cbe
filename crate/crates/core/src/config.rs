//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! seed = 7
//! epochs = 90
//! corpus = data/nottingham, extra/tunes.abc
//! out_dir = runs/first
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::adam::AdamConfig;
use crate::corpus::BatchConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub epochs: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub dropout: f64,
    pub adam: AdamConfig,
    pub batch: BatchConfig,
    /// Files or directories (searched recursively for `*.abc`).
    pub corpus: Vec<PathBuf>,
    /// Use only the first N tunes of the corpus.
    pub max_tunes: Option<usize>,
    pub out_dir: PathBuf,
    /// Continue from this checkpoint instead of a fresh init.
    pub resume: Option<PathBuf>,
    /// Record measured epoch time; when false the column is written as 0.
    pub wall_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            epochs: 90,
            hidden_size: 256,
            num_layers: 3,
            dropout: 0.2,
            adam: AdamConfig::default(),
            batch: BatchConfig::default(),
            corpus: Vec::new(),
            max_tunes: None,
            out_dir: PathBuf::from("runs/default"),
            resume: None,
            wall_clock: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_str_text(&text)
    }

    pub fn from_str_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one setting; CLI flag overrides go through here too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "hidden_size" => self.hidden_size = parse(key, value)?,
            "layers" | "num_layers" => self.num_layers = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "lr" | "learning_rate" => self.adam.learning_rate = parse(key, value)?,
            "beta1" => self.adam.beta1 = parse(key, value)?,
            "beta2" => self.adam.beta2 = parse(key, value)?,
            "eps" | "epsilon" => self.adam.epsilon = parse(key, value)?,
            "grad_clip" => self.adam.grad_clip = parse(key, value)?,
            "batch_size" => self.batch.batch_size = parse(key, value)?,
            "seq_len" => self.batch.seq_len = parse(key, value)?,
            "corpus" => {
                self.corpus = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
                    .collect()
            }
            "max_tunes" => self.max_tunes = Some(parse(key, value)?),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "resume" => self.resume = Some(PathBuf::from(value)),
            "wall_clock" => self.wall_clock = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.corpus.is_empty() {
            return Err(ConfigError::Invalid("no corpus paths configured".into()));
        }
        if let Some(p) = self.corpus.iter().find(|p| !p.exists()) {
            return Err(ConfigError::Invalid(format!(
                "corpus path {} does not exist",
                p.display()
            )));
        }
        if let Some(p) = self.resume.as_ref().filter(|p| !p.exists()) {
            return Err(ConfigError::Invalid(format!(
                "resume checkpoint {} does not exist",
                p.display()
            )));
        }
        if self.batch.batch_size == 0 || self.batch.seq_len == 0 {
            return Err(ConfigError::Invalid("batch_size and seq_len must be >= 1".into()));
        }
        if self.hidden_size == 0 || self.num_layers == 0 {
            return Err(ConfigError::Invalid("hidden_size and layers must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ConfigError::Invalid("dropout must be in [0, 1)".into()));
        }
        self.adam
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
