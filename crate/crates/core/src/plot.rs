//! Standalone SVG line charts of training metrics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::train::{read_metrics_csv, EpochMetrics, MetricsCsvError};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const Y_TICKS: usize = 5;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Csv(#[from] MetricsCsvError),
    #[error("metrics file has no rows")]
    NoRows,
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub y_max: f64,
    /// `(x, y)` in data units.
    pub points: Vec<(f64, f64)>,
}

/// Smallest multiple of half a power of ten that is >= `max`.
pub fn nice_ceiling(max: f64) -> f64 {
    if !(max > 0.0) || !max.is_finite() {
        return 1.0;
    }
    let step = 10f64.powf(max.log10().floor()) * 0.5;
    let top = (max / step).ceil() * step;
    // Guard against representation error turning 1.5 into 1.5000000000000002.
    (top * 1e9).round() / 1e9
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Pixel coordinates of each point, in the order given.
pub fn project(chart: &Chart) -> Vec<(f64, f64)> {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let (x_min, x_max) = x_range(chart);
    chart
        .points
        .iter()
        .map(|&(x, y)| {
            let fx = if x_max > x_min {
                (x - x_min) / (x_max - x_min)
            } else {
                0.5
            };
            let fy = (y / chart.y_max).clamp(0.0, 1.0);
            (LEFT + fx * plot_w, TOP + (1.0 - fy) * plot_h)
        })
        .collect()
}

fn x_range(chart: &Chart) -> (f64, f64) {
    let xs = chart.points.iter().map(|p| p.0);
    let lo = xs.clone().fold(f64::INFINITY, f64::min);
    let hi = xs.fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

pub fn render_svg(chart: &Chart) -> String {
    let plot_h = HEIGHT - TOP - BOTTOM;
    let bottom = HEIGHT - BOTTOM;
    let right = WIDTH - RIGHT;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, chart.title);
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bottom}" stroke="black"/>"#
    );
    for i in 0..=Y_TICKS {
        let v = chart.y_max * i as f64 / Y_TICKS as f64;
        let y = bottom - plot_h * i as f64 / Y_TICKS as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            fmt_num(v)
        );
    }
    let (x_min, x_max) = x_range(chart);
    for (v, x) in [(x_min, LEFT), (x_max, right)] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 16.0,
            fmt_num(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (right - LEFT) / 2.0,
        HEIGHT - 12.0,
        chart.x_label
    );
    let _ = writeln!(
        s,
        r#"<text class="y-label" x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + plot_h / 2.0,
        chart.y_label
    );
    let coords: Vec<String> = project(chart)
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        coords.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

pub fn loss_chart(rows: &[EpochMetrics]) -> Chart<'static> {
    let max = rows.iter().map(|r| r.mean_loss).fold(0.0, f64::max);
    Chart {
        title: "Training loss",
        x_label: "Time Steps",
        y_label: "Loss",
        y_max: nice_ceiling(max),
        points: rows.iter().map(|r| (r.epoch as f64, r.mean_loss)).collect(),
    }
}

pub fn accuracy_chart(rows: &[EpochMetrics]) -> Chart<'static> {
    Chart {
        title: "Training accuracy",
        x_label: "Time Steps",
        y_label: "Accuracy",
        y_max: 1.0,
        points: rows.iter().map(|r| (r.epoch as f64, r.accuracy)).collect(),
    }
}

/// Reads `metrics.csv` and writes `loss.svg` and `accuracy.svg` into
/// `out_dir`, returning their paths.
pub fn plot_metrics(csv: &Path, out_dir: &Path) -> Result<(PathBuf, PathBuf), PlotError> {
    let rows = read_metrics_csv(csv)?;
    if rows.is_empty() {
        return Err(PlotError::NoRows);
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PlotError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let loss = out_dir.join("loss.svg");
    let acc = out_dir.join("accuracy.svg");
    fs::write(&loss, render_svg(&loss_chart(&rows))).map_err(io(&loss))?;
    fs::write(&acc, render_svg(&accuracy_chart(&rows))).map_err(io(&acc))?;
    Ok((loss, acc))
}

/// Parses the `points` attribute of the first polyline in an SVG string.
pub fn polyline_points(svg: &str) -> Option<Vec<(f64, f64)>> {
    let start = svg.find("<polyline")?;
    let attr = svg[start..].find("points=\"")? + start + 8;
    let end = svg[attr..].find('"')? + attr;
    svg[attr..end]
        .split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',')?;
            Some((x.parse().ok()?, y.parse().ok()?))
        })
        .collect()
}
