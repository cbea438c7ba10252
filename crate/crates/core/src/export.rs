//! Output helpers: atomic file writes, the CSV dialect and static SVG charts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("create {}", dir.display()), e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::io(format!("create temp file in {}", dir.display()), e))?;
    tmp.write_all(bytes)
        .map_err(|e| Error::io(format!("write {}", path.display()), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(format!("rename into {}", path.display()), e.error))?;
    Ok(())
}

/// RFC-4180 writer with LF line endings.
pub fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    writer.into_inner().map_err(|e| Error::io("flush csv", e.into_error()))
}

/// Shortest decimal representation that round-trips to the same `f64`.
pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

/// Serializes with a trailing newline, so re-runs produce byte-identical files.
pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

const SERIES_COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn series_color(i: usize) -> &'static str {
    SERIES_COLORS[i % SERIES_COLORS.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    width: f64,
    height: f64,
    margin: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(width: f64, height: f64, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame {
            width,
            height,
            margin: 40.0,
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.margin + (x - self.x.0) / (self.x.1 - self.x.0) * (self.width - 2.0 * self.margin)
    }

    fn py(&self, y: f64) -> f64 {
        self.height - self.margin - (y - self.y.0) / (self.y.1 - self.y.0) * (self.height - 2.0 * self.margin)
    }

    fn open(&self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" font-family="sans-serif" font-size="11">"#,
            self.width, self.height
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
            self.width, self.height
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            self.width / 2.0,
            escape(title)
        );
        let (x0, x1, y0, y1) = (
            self.margin,
            self.width - self.margin,
            self.height - self.margin,
            self.margin,
        );
        let _ = writeln!(
            s,
            r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{x0}" y="{}" text-anchor="start">{}</text>"#,
            y0 + 15.0,
            fmt_axis(self.x.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{x1}" y="{}" text-anchor="end">{}</text>"#,
            y0 + 15.0,
            fmt_axis(self.x.1)
        );
        s
    }
}

fn fmt_axis(v: f64) -> String {
    format!("{v:.4}")
}

fn legend(s: &mut String, frame: &Frame, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = frame.margin + 14.0 * i as f64;
        let x = frame.width - frame.margin - 120.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 9.0,
            series_color(i),
            x + 14.0,
            y,
            escape(label)
        );
    }
}

/// A named curve for [`line_chart`].
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Polyline chart on a fixed 800×400 viewBox, one polyline per series.
pub fn line_chart(title: &str, series: &[Series<'_>]) -> String {
    let all_x = series.iter().flat_map(|s| s.x.iter().copied());
    let all_y = series.iter().flat_map(|s| s.y.iter().copied());
    let x = min_max(all_x).unwrap_or((0.0, 1.0));
    let y = min_max(all_y.chain(std::iter::once(0.0))).unwrap_or((0.0, 1.0));
    let frame = Frame::new(800.0, 400.0, x, y);
    let mut s = frame.open(title);
    for (i, line) in series.iter().enumerate() {
        let points: Vec<String> = line
            .x
            .iter()
            .zip(line.y)
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            series_color(i),
            points.join(" ")
        );
    }
    let labels: Vec<&str> = series.iter().map(|l| l.label).collect();
    legend(&mut s, &frame, &labels);
    s.push_str("</svg>\n");
    s
}

/// Grouped bar chart: one bar group per category, one bar per series.
pub fn grouped_bar_chart(title: &str, categories: usize, series: &[(&str, Vec<f64>)]) -> String {
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(0.0_f64, f64::max);
    let frame = Frame::new(800.0, 400.0, (0.0, categories as f64), (0.0, max.max(1e-12)));
    let mut s = frame.open(title);
    let slot = (frame.px(1.0) - frame.px(0.0)) * 0.8;
    let bar = slot / series.len().max(1) as f64;
    for c in 0..categories {
        let x0 = frame.px(c as f64) + slot * 0.125;
        for (i, (_, values)) in series.iter().enumerate() {
            let v = values.get(c).copied().unwrap_or(0.0);
            let top = frame.py(v);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x0 + bar * i as f64,
                top,
                bar,
                frame.py(0.0) - top,
                series_color(i)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{c}</text>"#,
            x0 + slot / 2.0,
            frame.height - frame.margin + 28.0
        );
    }
    let labels: Vec<&str> = series.iter().map(|(l, _)| *l).collect();
    legend(&mut s, &frame, &labels);
    s.push_str("</svg>\n");
    s
}

/// Labeled 2-D scatter on a fixed 600×600 viewBox.
pub fn scatter_chart(title: &str, points: &[(&str, f64, f64)]) -> String {
    let x = min_max(points.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let y = min_max(points.iter().map(|p| p.2)).unwrap_or((0.0, 1.0));
    let pad = |(lo, hi): (f64, f64)| {
        let d = (hi - lo).max(1e-9) * 0.15;
        (lo - d, hi + d)
    };
    let frame = Frame::new(600.0, 600.0, pad(x), pad(y));
    let mut s = frame.open(title);
    for (i, (label, x, y)) in points.iter().enumerate() {
        let (cx, cy) = (frame.px(*x), frame.py(*y));
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{}"/><text x="{:.2}" y="{:.2}" text-anchor="start">{}</text>"#,
            series_color(i),
            cx + 7.0,
            cy - 7.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}
