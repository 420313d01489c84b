//! CSV time series, basin tables, and SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::measures::{BasinPoint, DiagnosticsRecord};
use crate::scenario::TimeSeries;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: malformed table: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("no columns selected")]
    NoColumns,
    #[error("series is empty")]
    EmptySeries,
}

impl OutputError {
    /// Whether the error is a bad request rather than a failed read or write.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::UnknownColumn(_) | Self::NoColumns | Self::EmptySeries
        )
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Scientific notation with 12 significant digits.
fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_table<const N: usize>(
    header: [&str; N],
    rows: impl Iterator<Item = [f64; N]>,
    path: &Path,
) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error(path))?;
    w.write_record(header).map_err(csv_error(path))?;
    for row in rows {
        w.write_record(row.map(format_value)).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Header `t,p_ee,s_lin,tangle,concurrence,p_att_plus,p_att_minus` and one
/// row per record.
pub fn write_csv(series: &TimeSeries, path: &Path) -> Result<(), OutputError> {
    if series.is_empty() {
        return Err(OutputError::EmptySeries);
    }
    write_table(
        DiagnosticsRecord::COLUMNS,
        series.records.iter().map(DiagnosticsRecord::values),
        path,
    )
}

pub fn read_csv(path: &Path) -> Result<TimeSeries, OutputError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let malformed = |message: String| OutputError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let header = reader.headers().map_err(csv_error(path))?.clone();
    if header.iter().ne(DiagnosticsRecord::COLUMNS) {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_error(path))?;
        let mut values = [0.0; 7];
        for (slot, field) in values.iter_mut().zip(row.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| malformed(format!("row {}: bad number `{field}`", i + 1)))?;
        }
        records.push(DiagnosticsRecord::from_values(values));
    }
    Ok(TimeSeries { records })
}

/// Header `r,chi,tangle`.
pub fn write_basin_csv(points: &[BasinPoint], path: &Path) -> Result<(), OutputError> {
    write_table(
        ["r", "chi", "tangle"],
        points.iter().map(|p| [p.r, p.chi, p.tangle]),
        path,
    )
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#000000", "#2ca02c", "#9467bd", "#ff7f0e"];
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 48.0;

/// Roughly `target` round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// SVG document with one polyline per column against `t`.
pub fn render_svg(series: &TimeSeries, columns: &[&str]) -> Result<String, OutputError> {
    if columns.is_empty() {
        return Err(OutputError::NoColumns);
    }
    if series.is_empty() {
        return Err(OutputError::EmptySeries);
    }
    let data: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            series
                .column(c)
                .ok_or_else(|| OutputError::UnknownColumn(c.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let times = series.times();
    let (t0, t1) = (times[0], *times.last().unwrap());
    let t1 = if t1 > t0 { t1 } else { t0 + 1.0 };
    let finite = data.iter().flatten().copied().filter(|v| v.is_finite());
    let (mut y0, mut y1) = finite.fold((0.0f64, 1.0f64), |(a, b), v| (a.min(v), b.max(v)));
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pad = 0.02 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let y = |v: f64| TOP + (y1 - v) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    for v in ticks(t0, t1, 8) {
        let px = x(v);
        let base = TOP + plot_h;
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{:.2}" stroke="#444"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            base + 5.0,
            base + 18.0,
            tick_label(v)
        );
    }
    for v in ticks(y0, y1, 6) {
        let py = y(v);
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    for (i, (name, values)) in columns.iter().zip(&data).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = times
            .iter()
            .zip(values)
            .map(|(&t, &v)| format!("{:.3},{:.3}", x(t), y(if v.is_finite() { v } else { 0.0 })))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-column="{name}" fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text class="legend" x="{}" y="{}">{name}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_plot(series: &TimeSeries, columns: &[&str], path: &Path) -> Result<(), OutputError> {
    let svg = render_svg(series, columns)?;
    fs::write(path, svg).map_err(io_error(path))
}
