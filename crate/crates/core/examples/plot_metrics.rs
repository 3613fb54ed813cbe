// Draw loss and accuracy charts from a metrics.csv.
//
// cargo run --example plot_metrics -- [metrics.csv] [out_dir]
//
// Without arguments a 90-epoch curve falling from 1.4359 to 0.1737 is
// synthesized and plotted.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use abc_lstm::plot::plot_metrics;
use abc_lstm::train::METRICS_HEADER;

pub fn run_example(csv: Option<&Path>, out: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let csv = match csv {
        Some(p) => p.to_path_buf(),
        None => {
            let mut text = format!("{METRICS_HEADER}\n");
            for e in 1..=90 {
                let f = (e - 1) as f64 / 89.0;
                let loss = 0.1737 + (1.4359 - 0.1737) * (-4.0 * f).exp();
                let _ = writeln!(text, "{e},{loss:.6},{:.6},0.000", 0.94 - 0.5 * (-4.0 * f).exp());
            }
            std::fs::create_dir_all(out)?;
            let path = out.join("metrics.csv");
            std::fs::write(&path, text)?;
            path
        }
    };
    let (loss, acc) = plot_metrics(&csv, out)?;
    println!("wrote {} and {}", loss.display(), acc.display());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let csv = args.next().map(PathBuf::from);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("plot_metrics_example"));
    run_example(csv.as_deref(), &out)
}
