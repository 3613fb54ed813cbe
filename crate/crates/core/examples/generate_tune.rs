// Sample a tune from a checkpoint and score it.
//
// cargo run --release --example generate_tune -- [run_dir] [temperature]
//
// `run_dir` is a directory written by `abc-lstm train`; `best.ckpt` and
// `vocab.json` are read from it. Without one, a small model is trained
// for a minute first.

use std::path::PathBuf;

use abc_lstm::adam::AdamConfig;
use abc_lstm::checkpoint::load_checkpoint;
use abc_lstm::corpus::{abc_files_in, load_corpus, BatchConfig, Vocabulary};
use abc_lstm::model::{ModelConfig, ModelParams};
use abc_lstm::sampler::{generate, grammar_score, SampleConfig};
use abc_lstm::train::train_on_corpus;

fn quick_model() -> Result<(ModelParams, Vocabulary), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/oneills1850");
    let corpus = load_corpus(&abc_files_in(&dir)?)?.truncated(120);
    let model = ModelConfig {
        hidden_size: 128,
        ..ModelConfig::new(0)
    };
    let adam = AdamConfig {
        learning_rate: 3e-3,
        ..AdamConfig::default()
    };
    let outcome = train_on_corpus(&corpus, model, BatchConfig::default(), &adam, 12, 1, |m| {
        eprintln!("epoch {} loss {:.3} acc {:.3}", m.epoch, m.mean_loss, m.accuracy)
    })?;
    Ok((outcome.params, outcome.vocab))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (params, vocab) = match args.next() {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            let vocab = Vocabulary::from_json(&std::fs::read_to_string(dir.join("vocab.json"))?)?;
            (load_checkpoint(&dir.join("best.ckpt"))?.params, vocab)
        }
        None => quick_model()?,
    };
    let temperature = args.next().map_or(Ok(0.8), |t| t.parse())?;
    let cfg = SampleConfig {
        length: 500,
        temperature,
        rng_seed: 2024,
        ..SampleConfig::default()
    };
    let text = generate(&params, &vocab, &cfg)?;
    println!("{text}");
    let report = grammar_score(&text);
    println!(
        "\ngrammar: {}/{} lines valid ({:.2})",
        report.valid_lines, report.total_lines, report.score
    );
    Ok(())
}
