//! CSV tables and small SVG line plots for experiment output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gwidth::WidthEstimate;
use crate::recovery::{ExperimentRow, MinimalM};

fn csv_err(e: csv::Error) -> Error {
    Error::Io(format!("csv: {e}"))
}

fn write_rows<T: Serialize>(out: impl Write, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(input: impl Read, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let got = r.headers().map_err(csv_err)?;
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!("unexpected csv header {:?}", got.iter().collect::<Vec<_>>())));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::Parse(format!("csv row: {e}")))).collect()
}

pub const EXPERIMENT_HEADER: [&str; 12] =
    ["trial", "p", "k", "shape", "rank", "kind", "m", "success", "rel_error", "norm_value", "iters", "time_ms"];

pub fn write_experiment_csv(out: impl Write, rows: &[ExperimentRow]) -> Result<()> {
    write_rows(out, rows, &EXPERIMENT_HEADER)
}

pub fn read_experiment_csv(input: impl Read) -> Result<Vec<ExperimentRow>> {
    read_rows(input, &EXPERIMENT_HEADER)
}

pub const MINIMAL_HEADER: [&str; 3] = ["trial", "p", "m"];

/// Per-trial search outcomes; an empty `m` means no success up to the cap.
pub fn write_minimal_csv(out: impl Write, rows: &[MinimalM]) -> Result<()> {
    write_rows(out, rows, &MINIMAL_HEADER)
}

pub fn read_minimal_csv(input: impl Read) -> Result<Vec<MinimalM>> {
    read_rows(input, &MINIMAL_HEADER)
}

pub const WIDTH_HEADER: [&str; 4] = ["shape", "sample", "gamma_sq", "bound"];

/// One line of the width table. `sample` is the sample index, or `mean` /
/// `stderr` on the two summary lines closing each shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub shape: String,
    pub sample: String,
    pub gamma_sq: f64,
    pub bound: f64,
}

pub fn width_rows(est: &WidthEstimate) -> Vec<WidthRow> {
    let shape = est.shape.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    let base = est.i0_len as f64 + 1.0;
    let mut rows: Vec<WidthRow> = est
        .samples
        .iter()
        .map(|s| WidthRow { shape: shape.clone(), sample: s.sample.to_string(), gamma_sq: s.gamma_sq, bound: base + s.gamma_sq })
        .collect();
    rows.push(WidthRow { shape: shape.clone(), sample: "mean".into(), gamma_sq: est.mean_gamma_sq, bound: est.bound_mean });
    rows.push(WidthRow { shape, sample: "stderr".into(), gamma_sq: est.stderr_gamma_sq, bound: est.stderr_gamma_sq });
    rows
}

pub fn write_width_csv(out: impl Write, rows: &[WidthRow]) -> Result<()> {
    write_rows(out, rows, &WIDTH_HEADER)
}

pub fn read_width_csv(input: impl Read) -> Result<Vec<WidthRow>> {
    read_rows(input, &WIDTH_HEADER)
}

/// Fraction of successful rows per `(p, m)`.
pub fn success_curves(rows: &[ExperimentRow]) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut acc: BTreeMap<String, BTreeMap<usize, (usize, usize)>> = BTreeMap::new();
    for r in rows {
        let e = acc.entry(r.p.clone()).or_default().entry(r.m).or_default();
        e.0 += r.success as usize;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(p, by_m)| (p, by_m.into_iter().map(|(m, (s, n))| (m as f64, s as f64 / n as f64)).collect()))
        .collect()
}

/// Fraction of trials whose minimal `m` is at most `m`, for `m = 1..=m_max`.
pub fn minimal_m_curves(rows: &[MinimalM], m_max: usize) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut by_p: BTreeMap<String, Vec<Option<usize>>> = BTreeMap::new();
    for r in rows {
        by_p.entry(r.p.clone()).or_default().push(r.m);
    }
    by_p.into_iter()
        .map(|(p, ms)| {
            let n = ms.len() as f64;
            let pts = (1..=m_max)
                .map(|m| (m as f64, ms.iter().filter(|v| v.is_some_and(|v| v <= m)).count() as f64 / n))
                .collect();
            (p, pts)
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Line plot with axes, a few ticks and a legend.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 130.0, 40.0, 55.0);
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    y0 = y0.min(0.0);
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y1 = y0 + 1.0;
    }
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, ml + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="black" points="{ml},{mt} {ml},{} {},{}"/>"#,
        mt + ph,
        ml + pw,
        mt + ph
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sx(xv), mt + ph + 18.0, tick(xv));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, ml - 6.0, sy(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, h - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        mt + ph / 2.0,
        escape(y_label)
    );
    for (i, (name, data)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = data
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let ly = mt + 16.0 * i as f64 + 8.0;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - mr + 12.0, w - mr + 32.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - mr + 38.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
