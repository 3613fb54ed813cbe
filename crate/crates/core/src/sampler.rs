//! Autoregressive generation and line-level grammar scoring.

use serde::Serialize;
use thiserror::Error;

use crate::abc::{check_body_line, is_field_line};
use crate::corpus::{CorpusError, Vocabulary};
use crate::model::{step_logits, LstmState, ModelError, ModelParams};
use crate::numerics::{argmax, sample_categorical, softmax_in_place, NumericsError, Rng};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("temperature must be > 0, got {0}")]
    BadTemperature(f64),
    #[error("length must be >= 1")]
    ZeroLength,
    #[error("seed text is empty")]
    EmptySeed,
    #[error("seed character {ch:?} at offset {offset} is not in the vocabulary")]
    UnknownSeedChar { ch: char, offset: usize },
    #[error("model expects {model} symbols but the vocabulary has {vocab}")]
    VocabMismatch { model: usize, vocab: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Stochastic,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub seed_text: String,
    pub length: usize,
    pub temperature: f64,
    pub rng_seed: u64,
    pub mode: SampleMode,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            seed_text: "X:1\n".into(),
            length: 400,
            temperature: 1.0,
            rng_seed: 0,
            mode: SampleMode::Stochastic,
        }
    }
}

/// `softmax(logits / t)`.
pub fn temperature_scale(logits: &[f64], t: f64) -> Result<Vec<f64>, SampleError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(SampleError::BadTemperature(t));
    }
    let mut row: Vec<f64> = logits.iter().map(|x| x / t).collect();
    softmax_in_place(&mut row);
    Ok(row)
}

/// Returns the seed text followed by `cfg.length` generated characters.
pub fn generate(
    params: &ModelParams,
    vocab: &Vocabulary,
    cfg: &SampleConfig,
) -> Result<String, SampleError> {
    if params.config.vocab_size != vocab.len() {
        return Err(SampleError::VocabMismatch {
            model: params.config.vocab_size,
            vocab: vocab.len(),
        });
    }
    if !(cfg.temperature > 0.0) || !cfg.temperature.is_finite() {
        return Err(SampleError::BadTemperature(cfg.temperature));
    }
    if cfg.length == 0 {
        return Err(SampleError::ZeroLength);
    }
    let seed_ids = vocab.encode(&cfg.seed_text).map_err(|e| match e {
        CorpusError::UnknownChar { ch, offset } => SampleError::UnknownSeedChar { ch, offset },
        _ => SampleError::EmptySeed,
    })?;
    let Some((&last, warmup)) = seed_ids.split_last() else {
        return Err(SampleError::EmptySeed);
    };

    let mut state = LstmState::zeros(&params.config, 1);
    for &id in warmup {
        step_logits(params, id, &mut state)?;
    }
    let mut rng = Rng::new(cfg.rng_seed).substream("sampling");
    let mut out = cfg.seed_text.clone();
    let mut current = last;
    for _ in 0..cfg.length {
        let logits = step_logits(params, current, &mut state)?;
        current = match cfg.mode {
            SampleMode::Greedy => argmax(&logits),
            SampleMode::Stochastic => {
                let probs = temperature_scale(&logits, cfg.temperature)?;
                sample_categorical(&probs, &mut rng)?
            }
        };
        out.push(vocab.char(current).expect("model output is within the vocabulary"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineDiagnostic {
    pub line_no: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub score: f64,
    pub total_lines: usize,
    pub valid_lines: usize,
    pub diagnostics: Vec<LineDiagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Fraction of non-empty lines that are a field line, a `%` comment or a
/// body line the parser accepts without diagnostics. Line numbers count
/// every line of `text`, starting at 1.
pub fn grammar_score(text: &str) -> ScoreReport {
    let mut total = 0;
    let mut valid = 0;
    let mut diagnostics = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        if is_field_line(line) || line.starts_with('%') {
            valid += 1;
            continue;
        }
        let diags = check_body_line(line);
        if diags.is_empty() {
            valid += 1;
        } else {
            diagnostics.extend(diags.into_iter().map(|d| LineDiagnostic {
                line_no: i + 1,
                reason: format!("col {}: {}", d.column, d.reason),
            }));
        }
    }
    let (score, note) = if total == 0 {
        (0.0, Some("no non-empty lines".to_string()))
    } else {
        (valid as f64 / total as f64, None)
    };
    ScoreReport {
        score,
        total_lines: total,
        valid_lines: valid,
        diagnostics,
        note,
    }
}
