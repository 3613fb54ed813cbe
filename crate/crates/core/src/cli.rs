//! `abc-lstm` subcommands: `stats`, `train`, `generate`, `render`, `plot`.
//!
//! JSON results go to stdout, progress and errors to stderr. Exit status is
//! 0 on full success, 1 on failure and 2 when `render` converted some tunes
//! but not all.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::abc::parse_tune;
use crate::checkpoint::load_checkpoint;
use crate::config::RunConfig;
use crate::corpus::{corpus_stats, split_tunes, Vocabulary};
use crate::midi::{render_smf, DEFAULT_TEMPO};
use crate::model::{init_params, ModelConfig, ModelParams};
use crate::numerics::Rng;
use crate::plot::plot_metrics;
use crate::sampler::{generate, grammar_score, SampleConfig, SampleMode};
use crate::train::{load_run_corpus, train};

#[derive(Debug, Parser)]
#[command(name = "abc-lstm", version, about = "Character-level LSTM for ABC folk tunes")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for weight init, dropout and sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus size and vocabulary summary.
    Stats {
        /// `.abc` files or directories; defaults to `corpus` from --config.
        paths: Vec<PathBuf>,
    },
    /// Train a model, writing checkpoints and metrics.csv under --out.
    Train {
        /// Corpus files or directories, overriding the config.
        paths: Vec<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Extra `key=value` overrides, applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Sample text from a checkpoint and score its grammar.
    Generate(GenerateArgs),
    /// Convert each tune of an ABC file to `<stem>_<index>.mid`.
    Render {
        input: PathBuf,
        /// Microseconds per quarter note.
        #[arg(long, default_value_t = DEFAULT_TEMPO)]
        tempo: u32,
    },
    /// Draw loss.svg and accuracy.svg from a metrics.csv.
    Plot { metrics: PathBuf },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, required_unless_present = "random_init")]
    pub checkpoint: Option<PathBuf>,
    /// Defaults to vocab.json next to the checkpoint.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value = "X:1\n")]
    pub seed_text: String,
    #[arg(long, default_value_t = 400)]
    pub length: usize,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long)]
    pub greedy: bool,
    /// Sample from freshly initialized weights instead of a checkpoint.
    #[arg(long, requires = "vocab")]
    pub random_init: bool,
    #[arg(long, default_value_t = 256)]
    pub hidden_size: usize,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// Output file name inside --out.
    #[arg(long, default_value = "generated.abc")]
    pub output: String,
}

type CmdResult = Result<i32, String>;

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, out, err) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let c = &cli.common;
    match cli.command {
        Command::Stats { paths } => cmd_stats(c, paths, out),
        Command::Train {
            paths,
            epochs,
            resume,
            sets,
        } => cmd_train(c, paths, epochs, resume, &sets, out, err),
        Command::Generate(args) => cmd_generate(c, &args, out),
        Command::Render { input, tempo } => cmd_render(c, &input, tempo, out, err),
        Command::Plot { metrics } => cmd_plot(c, &metrics, out),
    }
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), String> {
    writeln!(out, "{}", serde_json::to_string(value).map_err(s)?).map_err(s)
}

fn base_config(c: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p).map_err(s)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn out_dir(c: &Common) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn cmd_stats(c: &Common, paths: Vec<PathBuf>, out: &mut dyn Write) -> CmdResult {
    let mut cfg = base_config(c)?;
    if !paths.is_empty() {
        cfg.corpus = paths;
    }
    if cfg.corpus.is_empty() {
        return Err("no corpus paths given".into());
    }
    if let Some(p) = cfg.corpus.iter().find(|p| !p.exists()) {
        return Err(format!("{}: no such file or directory", p.display()));
    }
    let corpus = load_run_corpus(&cfg).map_err(s)?;
    print_json(out, &serde_json::to_value(corpus_stats(&corpus)).map_err(s)?)?;
    Ok(0)
}

fn cmd_train(
    c: &Common,
    paths: Vec<PathBuf>,
    epochs: Option<usize>,
    resume: Option<PathBuf>,
    sets: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let mut cfg = base_config(c)?;
    for kv in sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects key=value, got {kv:?}"))?;
        cfg.set(k.trim(), v.trim()).map_err(s)?;
    }
    if !paths.is_empty() {
        cfg.corpus = paths;
    }
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    if resume.is_some() {
        cfg.resume = resume;
    }
    let total = cfg.epochs;
    let outcome = train(&cfg, |m| {
        let _ = writeln!(
            err,
            "epoch {}/{} loss={:.4} acc={:.4}",
            m.epoch, total, m.mean_loss, m.accuracy
        );
    })
    .map_err(s)?;
    let last = outcome.history.last();
    print_json(
        out,
        &json!({
            "out_dir": cfg.out_dir,
            "epochs_run": outcome.history.len(),
            "vocab_size": outcome.vocab.len(),
            "final_loss": last.map(|m| m.mean_loss),
            "final_accuracy": last.map(|m| m.accuracy),
        }),
    )?;
    Ok(0)
}

fn load_vocab(path: &Path) -> Result<Vocabulary, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Vocabulary::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_generate(c: &Common, a: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    let seed = c.seed.unwrap_or(0);
    let vocab_path = match (&a.vocab, &a.checkpoint) {
        (Some(v), _) => v.clone(),
        (None, Some(ck)) => ck.with_file_name("vocab.json"),
        (None, None) => return Err("--vocab is required".into()),
    };
    let vocab = load_vocab(&vocab_path)?;
    let params: ModelParams = if a.random_init {
        let cfg = ModelConfig {
            vocab_size: vocab.len(),
            hidden_size: a.hidden_size,
            num_layers: a.layers,
            dropout: 0.0,
        };
        init_params(cfg, &mut Rng::new(seed).substream("weights")).map_err(s)?
    } else {
        let ck = a.checkpoint.as_ref().expect("clap enforces --checkpoint");
        load_checkpoint(ck).map_err(|e| format!("{}: {e}", ck.display()))?.params
    };
    if params.config.vocab_size != vocab.len() {
        return Err(format!(
            "checkpoint expects {} symbols but {} has {}",
            params.config.vocab_size,
            vocab_path.display(),
            vocab.len()
        ));
    }
    let cfg = SampleConfig {
        seed_text: a.seed_text.replace("\\n", "\n"),
        length: a.length,
        temperature: a.temperature,
        rng_seed: seed,
        mode: if a.greedy {
            SampleMode::Greedy
        } else {
            SampleMode::Stochastic
        },
    };
    let text = generate(&params, &vocab, &cfg).map_err(s)?;
    let dir = out_dir(c);
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(&a.output);
    fs::write(&path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
    let report = grammar_score(&text);
    print_json(
        out,
        &json!({
            "output": path,
            "chars": text.chars().count(),
            "grammar": report,
        }),
    )?;
    Ok(0)
}

fn cmd_render(
    c: &Common,
    input: &Path,
    tempo: u32,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let text = fs::read(input).map_err(|e| format!("{}: {e}", input.display()))?;
    let (tunes, _) = split_tunes(&String::from_utf8_lossy(&text));
    if tunes.is_empty() {
        return Err(format!("{}: no tunes with an X: header", input.display()));
    }
    let dir = out_dir(c);
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "tune".into());
    let mut written = Vec::new();
    let mut failed = Vec::new();
    for (i, tune) in tunes.iter().enumerate() {
        let idx = i + 1;
        let result = parse_tune(tune)
            .map_err(s)
            .and_then(|ast| {
                for d in &ast.diagnostics {
                    let _ = writeln!(err, "tune {idx}: {d}");
                }
                render_smf(&ast, tempo).map_err(s)
            })
            .and_then(|bytes| {
                let path = dir.join(format!("{stem}_{idx}.mid"));
                fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
                Ok(path)
            });
        match result {
            Ok(path) => written.push(path),
            Err(e) => {
                let _ = writeln!(err, "tune {idx} failed: {e}");
                failed.push(json!({"index": idx, "error": e}));
            }
        }
    }
    print_json(out, &json!({"written": written, "failed": failed}))?;
    Ok(match (written.is_empty(), failed.is_empty()) {
        (_, true) => 0,
        (true, false) => 1,
        (false, false) => 2,
    })
}

fn cmd_plot(c: &Common, metrics: &Path, out: &mut dyn Write) -> CmdResult {
    let (loss, acc) = plot_metrics(metrics, &out_dir(c)).map_err(s)?;
    print_json(out, &json!({"loss": loss, "accuracy": acc}))?;
    Ok(0)
}
