// Memorize one short tune, then replay it greedily from a 10-character seed.
//
// cargo run --release --example train_tiny -- [tune.abc] [epochs]

use abc_lstm::adam::AdamConfig;
use abc_lstm::corpus::{BatchConfig, CorpusText};
use abc_lstm::model::ModelConfig;
use abc_lstm::sampler::{generate, SampleConfig, SampleMode};
use abc_lstm::train::train_on_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/overfit_tune.abc").into());
    let epochs: usize = args.next().map_or(Ok(30), |s| s.parse())?;
    let tune = std::fs::read_to_string(&path)?;
    let env = |k: &str, d: f64| std::env::var(k).ok().and_then(|v| v.parse().ok()).unwrap_or(d);

    let corpus = CorpusText::from_tunes(vec![tune.clone(); env("REPS", 20.0) as usize])?;
    let model = ModelConfig {
        hidden_size: env("H", 128.0) as usize,
        dropout: env("P", 0.0),
        ..ModelConfig::new(0)
    };
    let batch = BatchConfig {
        batch_size: env("B", 4.0) as usize,
        seq_len: 64,
    };
    let adam = AdamConfig {
        learning_rate: env("LR", 0.005),
        ..AdamConfig::default()
    };
    let seed = env("SEED", 7.0) as u64;
    let outcome = train_on_corpus(&corpus, model, batch, &adam, epochs, seed, |m| {
        eprintln!("epoch {:>3} loss {:.4} acc {:.4}", m.epoch, m.mean_loss, m.accuracy);
    })?;

    let prompt: String = tune.chars().take(10).collect();
    let cfg = SampleConfig {
        seed_text: prompt,
        length: 50,
        mode: SampleMode::Greedy,
        ..SampleConfig::default()
    };
    let text = generate(&outcome.params, &outcome.vocab, &cfg)?;
    let expected: Vec<char> = tune.chars().skip(10).take(50).collect();
    let got: Vec<char> = text.chars().skip(10).collect();
    let matched = expected.iter().zip(&got).filter(|(a, b)| a == b).count();
    println!("{text}");
    println!("matched {matched}/50 characters after the seed");
    Ok(())
}
