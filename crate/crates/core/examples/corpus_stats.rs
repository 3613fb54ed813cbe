// Corpus summary: tune count, vocabulary and batch layout.
//
// cargo run --example corpus_stats -- [path ...]

use std::path::PathBuf;

use abc_lstm::corpus::{build_vocabulary, corpus_stats, load_corpus, make_batches, BatchConfig};
use abc_lstm::train::resolve_corpus_paths;

pub fn run_example(paths: &[PathBuf]) -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus(&resolve_corpus_paths(paths)?)?;
    let stats = corpus_stats(&corpus);
    println!("{}", serde_json::to_string_pretty(&stats)?);

    let vocab = build_vocabulary(&corpus);
    let shown: String = vocab
        .chars()
        .iter()
        .map(|c| c.escape_default().to_string())
        .collect::<Vec<_>>()
        .join(" ");
    println!("vocabulary ({}): {shown}", vocab.len());

    let ids = vocab.encode(&corpus.text())?;
    let batches = make_batches(&ids, BatchConfig::default())?;
    let first = &batches.segments[0];
    println!(
        "{} segments of 16x64; row 0 starts {:?}",
        batches.num_segments(),
        vocab.decode(&first.inputs.row(0)[..24])?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
        paths = vec![data.join("nottingham"), data.join("oneills1850")];
    }
    run_example(&paths)
}
