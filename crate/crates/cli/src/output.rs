//! CSV tables and SVG plots.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use serde_json::{json, Map, Value};

use crate::config::{Experiment, Mode};
use crate::run::Outcome;

pub const HEADER: [&str; 15] = [
    "family",
    "d",
    "mode",
    "meanset",
    "partition",
    "estimator",
    "n",
    "D_lower",
    "mmreg",
    "log_bound",
    "bound",
    "oracle_prob",
    "oracle_se",
    "oracle_kind",
    "extra_json",
];

/// 17 significant digits, so values round-trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn write_csv<W: Write>(w: W, results: &[(&Experiment, &Outcome)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(HEADER)?;
    for (exp, out) in results {
        for row in &out.rows {
            let mut extra = Map::new();
            extra.insert("config".into(), exp.echo.clone());
            extra.insert("experiment".into(), json!(exp.name));
            for (k, v) in &row.extras {
                extra.insert(k.clone(), v.clone());
            }
            let oracle = row.oracle;
            csv.write_record([
                row.family.clone(),
                row.d.to_string(),
                row.mode.as_str().to_string(),
                row.meanset.clone(),
                row.partition.clone().unwrap_or_default(),
                row.estimator.clone().unwrap_or_default(),
                row.n.map(|n| n.to_string()).unwrap_or_default(),
                opt_float(row.d_lower),
                opt_float(row.mmreg),
                opt_float(row.log_bound),
                opt_float(row.bound),
                opt_float(oracle.map(|o| o.prob)),
                opt_float(oracle.map(|o| o.se)),
                oracle.map_or("none", |o| o.kind.as_str()).to_string(),
                serde_json::to_string(&Value::Object(extra))?,
            ])?;
        }
    }
    csv.flush()?;
    Ok(())
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    /// Draw as a line without markers.
    line_only: bool,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|i| first + i as f64 * step)
        .take_while(|t| *t <= hi + 1e-9 * step)
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn plot(title: &str, x_label: &str, y_label: &str, series: &[Series], note: Option<&str>) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 180.0, 50.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in nice_ticks(x0, x1, 6) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{}" stroke="#e0e0e0"/>"##, top + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, top + ph + 18.0, tick_label(t));
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#e0e0e0"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        if path.len() > 1 {
            let dash = if ser.line_only { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
        }
        if !ser.line_only {
            for p in &path {
                let (x, y) = p.split_once(',').unwrap();
                let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&ser.name));
    }
    if let Some(note) = note {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, left + 10.0, top + 18.0, escape(note));
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else if r.abs() >= 1e4 || r.abs() < 1e-3 {
        format!("{r:.1e}")
    } else {
        format!("{r}")
    }
}

/// Bound (and oracle) curves against `log n`, or `mmreg` against `log n` with
/// the fitted slope for regret scans.
pub fn svg(results: &[(&Experiment, &Outcome)]) -> String {
    let mode = results[0].0.mode;
    let mut series = Vec::new();
    let mut notes = Vec::new();
    for (exp, out) in results {
        let rows: Vec<_> = out.rows.iter().filter(|r| r.n.is_some()).collect();
        let ln = |r: &crate::run::Row| (r.n.unwrap() as f64).ln();
        if mode == Mode::RegretScan {
            series.push(Series {
                name: format!("{} mmreg", exp.name),
                points: rows.iter().map(|r| (ln(r), r.mmreg.unwrap_or(f64::NAN))).collect(),
                line_only: false,
            });
            if let Some((slope, intercept)) = out.fit {
                let xs: Vec<f64> = rows.iter().map(|r| ln(r)).collect();
                let ends = [xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(1.0)];
                series.push(Series {
                    name: format!("{} fit", exp.name),
                    points: ends.iter().map(|x| (*x, intercept + slope * x)).collect(),
                    line_only: true,
                });
                notes.push(format!("{}: slope = {slope:.4}", exp.name));
            }
        } else {
            series.push(Series {
                name: format!("{} log bound", exp.name),
                points: rows.iter().map(|r| (ln(r), r.log_bound.unwrap_or(f64::NAN))).collect(),
                line_only: false,
            });
            let oracle: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.oracle.filter(|o| o.prob > 0.0).map(|o| (ln(r), o.prob.ln())))
                .collect();
            if !oracle.is_empty() {
                series.push(Series {
                    name: format!("{} log oracle", exp.name),
                    points: oracle,
                    line_only: false,
                });
            }
        }
    }
    let note = (!notes.is_empty()).then(|| notes.join("; "));
    match mode {
        Mode::RegretScan => plot("Minimax regret against log n", "log n", "mmreg (nats)", &series, note.as_deref()),
        _ => plot(
            &format!("{} bound against log n", mode.as_str()),
            "log n",
            "log probability (nats)",
            &series,
            None,
        ),
    }
}
