//! Run manifests, CSV writers and SVG CDF overlays.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Fully resolved configuration (file values overridden by flags).
    pub config: serde_json::Value,
    pub wall_seconds: f64,
    /// Excluded paths, censoring rates, convergence flags and the like.
    pub diagnostics: serde_json::Value,
    pub artifacts: Vec<String>,
}

impl RunManifest {
    #[must_use]
    pub fn new(command: &str, seed: u64, workers: Option<usize>, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            workers,
            config,
            wall_seconds: 0.0,
            diagnostics: serde_json::Value::Null,
            artifacts: Vec::new(),
        }
    }

    /// Write as `<dir>/<command>_manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}_manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

/// Output directory with artifact bookkeeping for the manifest.
#[derive(Debug)]
pub struct OutputDir {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn record(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    /// CSV with a one-line header.
    pub fn csv<R: AsRef<[String]>>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.record(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.as_ref())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        fs::write(self.record(name), serde_json::to_string_pretty(value)?)?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.record(name), body)?;
        Ok(())
    }

    /// Path for an artifact written by other code (binary dumps).
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.record(name)
    }
}

/// Shortest round-trip formatting of a float for CSV cells.
#[must_use]
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

/// One polyline of an SVG plot.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Empirical CDF as a step polyline.
    #[must_use]
    pub fn empirical_cdf(label: &str, sorted: &[f64]) -> Self {
        let n = sorted.len() as f64;
        let mut points = Vec::with_capacity(2 * sorted.len());
        for (i, &x) in sorted.iter().enumerate() {
            points.push((x, i as f64 / n));
            points.push((x, (i + 1) as f64 / n));
        }
        Self { label: label.to_string(), points }
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Polyline overlay with a y range of [0, 1] and the x range of the data.
#[must_use]
pub fn svg_overlay(title: &str, x_label: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| x.is_finite());
    let (mut lo, mut hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(lo < hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    let sx = |x: f64| m + (x - lo) / (hi - lo) * (w - 2.0 * m);
    let sy = |y: f64| h - m - y.clamp(0.0, 1.0) * (h - 2.0 * m);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(out, r#"<path d="M{m},{} L{},{} M{m},{} L{m},{m}" stroke="black" fill="none"/>"#, h - m, w - m, h - m, h - m);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 10.0, escape(x_label));
    let _ = writeln!(out, r#"<text x="{m}" y="{}" text-anchor="middle">{lo:.3}</text>"#, h - m + 15.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{hi:.3}</text>"#, w - m, h - m + 15.0);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">0</text><text x="{}" y="{}" text-anchor="end">1</text>"#,
        m - 5.0,
        h - m,
        m - 5.0,
        m + 4.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().filter(|p| p.0.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" stroke="{color}" fill="none"/>"#, pts.join(" "));
        let _ =
            writeln!(out, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, w - m - 150.0, m + 15.0 * (i as f64 + 1.0), escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
