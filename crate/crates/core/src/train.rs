//! Epoch loop with stateful batching, per-epoch checkpoints and `metrics.csv`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::adam::{adam_step, AdamConfig, AdamError, AdamState};
use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, Progress};
use crate::config::{ConfigError, RunConfig};
use crate::corpus::{
    abc_files_in, build_vocabulary, load_corpus, make_batches, BatchConfig, BatchSet, CorpusError,
    CorpusText, Vocabulary,
};
use crate::model::{
    backward, forward, init_params, loss_and_accuracy, LstmState, Mode, ModelConfig, ModelError,
    ModelParams,
};
use crate::numerics::Rng;

pub const METRICS_HEADER: &str = "epoch,loss,accuracy,wall_time_s";

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training diverged: non-finite loss in epoch {epoch}, segment {segment}")]
    Diverged { epoch: usize, segment: usize },
    #[error("no training segments")]
    NoBatches,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint does not match corpus: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Adam(#[from] AdamError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Metrics(#[from] MetricsCsvError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
    pub wall_time: f64,
}

impl EpochMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.3}",
            self.epoch, self.mean_loss, self.accuracy, self.wall_time
        )
    }
}

/// One pass over all segments in stream order, starting from zero state.
///
/// Dropout masks are drawn from `rng`; use a per-epoch substream so a
/// resumed run sees the same masks.
pub fn train_epoch(
    params: &mut ModelParams,
    batches: &BatchSet,
    opt: &mut AdamState,
    cfg: &AdamConfig,
    epoch: usize,
    rng: &mut Rng,
) -> Result<EpochMetrics, TrainError> {
    if batches.segments.is_empty() {
        return Err(TrainError::NoBatches);
    }
    let start = Instant::now();
    let mut state = LstmState::zeros(&params.config, batches.config.batch_size);
    let (mut loss_sum, mut acc_sum, mut positions) = (0.0, 0.0, 0usize);
    for (k, seg) in batches.segments.iter().enumerate() {
        let out = forward(params, &seg.inputs, &state, Mode::Train, rng)?;
        let (loss, acc) = loss_and_accuracy(&out.probs, &seg.targets)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { epoch, segment: k });
        }
        let grads = backward(params, &out.cache, &seg.targets)?;
        adam_step(params, &grads, opt, cfg)?;
        if params.tensors().iter().any(|t| !t.is_finite()) {
            return Err(TrainError::Diverged { epoch, segment: k });
        }
        let n = seg.inputs.batch() * seg.inputs.steps();
        loss_sum += loss * n as f64;
        acc_sum += acc * n as f64;
        positions += n;
        state = out.state;
    }
    Ok(EpochMetrics {
        epoch,
        mean_loss: loss_sum / positions as f64,
        accuracy: acc_sum / positions as f64,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Expands directories into their `*.abc` files.
pub fn resolve_corpus_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            out.extend(abc_files_in(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Loads the configured corpus, honoring `max_tunes`.
pub fn load_run_corpus(cfg: &RunConfig) -> Result<CorpusText, TrainError> {
    let files = resolve_corpus_paths(&cfg.corpus)?;
    let corpus = load_corpus(&files)?;
    Ok(match cfg.max_tunes {
        Some(n) => corpus.truncated(n),
        None => corpus,
    })
}

pub fn epoch_checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:04}.ckpt")
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochMetrics>,
    pub params: ModelParams,
    pub vocab: Vocabulary,
}

/// Trains on an in-memory corpus without touching the filesystem. Uses
/// the same seeding as [`train`]. `model.vocab_size` is replaced by the
/// size of the corpus vocabulary.
pub fn train_on_corpus(
    corpus: &CorpusText,
    mut model: ModelConfig,
    batch: BatchConfig,
    adam_cfg: &AdamConfig,
    epochs: usize,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome, TrainError> {
    let vocab = build_vocabulary(corpus);
    let ids = vocab.encode(&corpus.text())?;
    let batches = make_batches(&ids, batch)?;
    model.vocab_size = vocab.len();
    let root = Rng::new(seed);
    let mut params = init_params(model, &mut root.substream("weights"))?;
    let mut adam = AdamState::new(&params);
    let mut history = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let mut rng = root.substream(&format!("dropout/epoch{epoch}"));
        let m = train_epoch(&mut params, &batches, &mut adam, adam_cfg, epoch, &mut rng)?;
        on_epoch(&m);
        history.push(m);
    }
    Ok(TrainOutcome {
        history,
        params,
        vocab,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Full training run. Writes `vocab.json`, `epoch_####.ckpt` after every
/// epoch, `best.ckpt` whenever the epoch loss improves, and one
/// `metrics.csv` row per epoch. `on_epoch` sees each epoch's metrics as
/// soon as its files are written.
///
/// On divergence the error is returned; files from finished epochs stay.
pub fn train(
    cfg: &RunConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let corpus = load_run_corpus(cfg)?;
    let vocab = build_vocabulary(&corpus);
    let ids = vocab.encode(&corpus.text())?;
    let batches = make_batches(&ids, cfg.batch)?;

    let out_dir = &cfg.out_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let vocab_path = out_dir.join("vocab.json");
    fs::write(&vocab_path, vocab.to_json()).map_err(io_err(&vocab_path))?;

    let root = Rng::new(cfg.seed);
    let (mut params, mut adam, start_epoch) = match &cfg.resume {
        Some(path) => {
            let ckpt = load_checkpoint(path)?;
            if ckpt.params.config.vocab_size != vocab.len() {
                return Err(TrainError::Mismatch(format!(
                    "checkpoint vocab size {} vs corpus {}",
                    ckpt.params.config.vocab_size,
                    vocab.len()
                )));
            }
            (ckpt.params, ckpt.adam, ckpt.progress.epochs_completed as usize)
        }
        None => {
            let model_cfg = ModelConfig {
                vocab_size: vocab.len(),
                hidden_size: cfg.hidden_size,
                num_layers: cfg.num_layers,
                dropout: cfg.dropout,
            };
            let params = init_params(model_cfg, &mut root.substream("weights"))?;
            let adam = AdamState::new(&params);
            (params, adam, 0)
        }
    };

    let metrics_path = out_dir.join("metrics.csv");
    let appending = cfg.resume.is_some() && metrics_path.exists();
    let mut best = f64::INFINITY;
    let mut kept = String::new();
    if appending {
        // Drop rows past the resume point so they are not duplicated.
        for m in read_metrics_csv(&metrics_path)? {
            if m.epoch <= start_epoch {
                best = best.min(m.mean_loss);
                kept.push_str(&m.csv_row());
                kept.push('\n');
            }
        }
    }
    fs::write(&metrics_path, format!("{METRICS_HEADER}\n{kept}")).map_err(io_err(&metrics_path))?;

    let mut history = Vec::new();
    for epoch in start_epoch + 1..=cfg.epochs {
        let mut rng = root.substream(&format!("dropout/epoch{epoch}"));
        let mut m = train_epoch(&mut params, &batches, &mut adam, &cfg.adam, epoch, &mut rng)?;
        if !cfg.wall_clock {
            m.wall_time = 0.0;
        }
        let ckpt = Checkpoint {
            params: params.clone(),
            adam: adam.clone(),
            progress: Progress {
                epochs_completed: epoch as u32,
            },
        };
        save_checkpoint(&ckpt, &out_dir.join(epoch_checkpoint_name(epoch)))?;
        if m.mean_loss < best {
            best = m.mean_loss;
            save_checkpoint(&ckpt, &out_dir.join("best.ckpt"))?;
        }
        let mut f = OpenOptions::new()
            .append(true)
            .open(&metrics_path)
            .map_err(io_err(&metrics_path))?;
        writeln!(f, "{}", m.csv_row()).map_err(io_err(&metrics_path))?;
        on_epoch(&m);
        history.push(m);
    }
    Ok(TrainOutcome {
        history,
        params,
        vocab,
    })
}

#[derive(Debug, Error)]
pub enum MetricsCsvError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
}

/// Parses a `metrics.csv` written by [`train`].
pub fn read_metrics_csv(path: &Path) -> Result<Vec<EpochMetrics>, MetricsCsvError> {
    let text = fs::read_to_string(path).map_err(|source| MetricsCsvError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_metrics_csv(&text)
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpochMetrics>, MetricsCsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header_ok = reader
        .headers()
        .map(|h| h.iter().collect::<Vec<_>>() == METRICS_HEADER.split(',').collect::<Vec<_>>())
        .unwrap_or(false);
    if !header_ok {
        return Err(MetricsCsvError::Malformed {
            line: 1,
            reason: format!("expected header {METRICS_HEADER:?}"),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| MetricsCsvError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| MetricsCsvError::Malformed { line, reason };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64, MetricsCsvError> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("field {} {:?}: {e}", i + 1, &rec[i])))
        };
        let epoch = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| bad(format!("epoch {:?}: {e}", &rec[0])))?;
        rows.push(EpochMetrics {
            epoch,
            mean_loss: num(1)?,
            accuracy: num(2)?,
            wall_time: num(3)?,
        });
    }
    Ok(rows)
}
