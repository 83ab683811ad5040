//! Artifact emission: CSV tables and static SVG log-log plots.

use crate::error::Result;
use crate::stats::LineFit;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

/// Header row from the field names, one row per item. Floats use the
/// shortest round-trip form, so identical values give identical bytes.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// One data series of a log-log plot, optionally with its fitted line
/// (`ln y = slope·ln x + intercept`).
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub fit: Option<LineFit>,
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Minimal log-log scatter plot with fitted lines.
pub fn write_loglog_svg(path: &Path, title: &str, x_label: &str, series: &[Series]) -> Result<()> {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts = || series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts() {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |lx: f64| m + (lx - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |ly: f64| h - m - (ly - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
    for k in (x0 as i32)..=(x1 as i32) {
        let x = sx(k as f64);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{k}</text>"#, h - m + 16.0);
    }
    for k in (y0 as i32)..=(y1 as i32) {
        let y = sy(k as f64);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"#, m - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, w / 2.0, h - 16.0);
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        for &(x, y) in ser.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0) {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{c}"/>"#, sx(x.log10()), sy(y.log10()));
        }
        let mut label = ser.label.clone();
        if let Some(f) = ser.fit {
            let ln10 = std::f64::consts::LN_10;
            let ly = |lx: f64| (f.slope * lx * ln10 + f.intercept) / ln10;
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}"/>"#,
                sx(x0),
                sy(ly(x0)),
                sx(x1),
                sy(ly(x1))
            );
            let _ = write!(label, " (slope {:.4})", f.slope);
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" fill="{c}">{label}</text>"#, m + 10.0, m + 18.0 * (i as f64 + 1.0));
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}
