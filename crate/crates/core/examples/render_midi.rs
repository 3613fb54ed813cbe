// Parse one tune, show its pitches and ticks, and write a MIDI file.
//
// cargo run --example render_midi -- [tune.abc] [out.mid]

use std::path::{Path, PathBuf};

use abc_lstm::abc::{parse_tune, Event};
use abc_lstm::midi::{build_midi_doc, to_bytes, MidiEvent, DEFAULT_TEMPO};

pub const TUNE: &str = "X:1\nT:Speed the Plough\nM:4/4\nL:1/8\nK:G\nGABG DGBG|cBAG FGAF|(3GAB dB cAFA|G2B2 G4|]\n";

pub fn run_example(text: &str, out: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let ast = parse_tune(text)?;
    for d in &ast.diagnostics {
        eprintln!("skipped: {d}");
    }
    let bars = ast.events.iter().filter(|e| matches!(e, Event::Bar(_))).count();
    println!(
        "{:?}: {} notes in {bars} bars, meter {}/{}",
        ast.headers.get(&'T').map_or("untitled", String::as_str),
        ast.notes().count(),
        ast.meter.0,
        ast.meter.1
    );
    let doc = build_midi_doc(&ast, DEFAULT_TEMPO)?;
    let line: Vec<String> = doc
        .track
        .iter()
        .filter_map(|(_, e)| match e {
            MidiEvent::NoteOn { key, .. } => Some(key.to_string()),
            _ => None,
        })
        .take(16)
        .collect();
    println!("first pitches: {}", line.join(" "));
    println!("length: {} ticks", doc.absolute_times().last().copied().unwrap_or(0));
    std::fs::write(out, to_bytes(&doc))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(p) => std::fs::read_to_string(p)?,
        None => TUNE.to_string(),
    };
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("render_midi_example.mid"));
    run_example(&text, &out)
}
