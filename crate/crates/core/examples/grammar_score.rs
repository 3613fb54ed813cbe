// Line-level grammar score of an ABC text, as JSON.
//
// cargo run --example grammar_score -- [file.abc]

use abc_lstm::sampler::grammar_score;

pub const SAMPLE: &str = "X:1\nT:Sample\nM:6/8\nK:D\n|:A|dfa afd|g2e fdB|\nA>B c d2 @@|\n";

pub fn run_example(text: &str) -> Result<(), Box<dyn std::error::Error>> {
    let report = grammar_score(text);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    run_example(&text)
}
