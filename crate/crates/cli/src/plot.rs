//! Minimal SVG line plots with logarithmic axes.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::config::ExperimentConfig;
use crate::experiments::{schema, CellRow, Value};

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Int(i) => Some(*i as f64),
        _ => None,
    }
}

/// First numeric metric against `t` when the experiment has a `t`
/// parameter and against `n` otherwise, averaged over seeds.
pub fn experiment_plot(cfg: &ExperimentConfig, rows: &[(u64, CellRow)]) -> String {
    let s = schema(cfg.experiment);
    let t_idx = s.params.iter().position(|p| *p == "t");
    let y_idx = rows
        .first()
        .and_then(|(_, r)| r.metrics.iter().position(|m| matches!(m, Value::Float(_))))
        .unwrap_or(0);
    let y_name = s.metrics.get(y_idx).copied().unwrap_or("value");
    let x_name = if t_idx.is_some() { "t" } else { "n" };
    let mut acc: BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>> = BTreeMap::new();
    for (_, r) in rows {
        let x = match t_idx {
            Some(i) => as_f64(&r.params[i]),
            None => r.n.map(|n| n as f64),
        };
        let (Some(x), Some(y)) = (x, r.metrics.get(y_idx).and_then(as_f64)) else { continue };
        let label = match t_idx {
            Some(_) => format!("{} n={}", short(&r.body), r.n.unwrap_or(0)),
            None => short(&r.body),
        };
        let e = acc.entry(label).or_default().entry(x.to_bits()).or_insert((x, 0.0, 0));
        e.1 += y;
        e.2 += 1;
    }
    let series: Vec<Series> = acc
        .into_iter()
        .map(|(label, pts)| {
            let mut points: Vec<(f64, f64)> = pts.into_values().map(|(x, sum, c)| (x, sum / c as f64)).collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points }
        })
        .collect();
    svg(&format!("{} ({})", cfg.experiment.id(), y_name), x_name, y_name, &series)
}

fn short(body: &str) -> String {
    if body.len() > 48 {
        format!("{}…", &body[..body.char_indices().nth(47).map_or(body.len(), |(i, _)| i)])
    } else {
        body.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Log-log plot; non-positive values are dropped.
pub fn svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> =
        series.iter().flat_map(|s| s.points.iter().copied()).filter(|(x, y)| *x > 0.0 && *y > 0.0).collect();
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).log10();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).log10();
        if !lo.is_finite() || !hi.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let px = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for (lo, hi, horiz) in [(x0, x1, true), (y0, y1, false)] {
        for e in (lo.floor() as i32)..=(hi.ceil() as i32) {
            let v = e as f64;
            if v < lo - 1e-9 || v > hi + 1e-9 {
                continue;
            }
            let label = format!("1e{e}");
            if horiz {
                let x = px(10f64.powf(v));
                let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{}" stroke="black"/>"#, b + 5.0);
                let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle" font-size="11">{label}</text>"#, b + 18.0);
            } else {
                let y = py(10f64.powf(v));
                let _ = writeln!(s, r#"<line x1="{}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/>"#, l - 5.0);
                let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="11">{label}</text>"#, l - 8.0, y + 4.0);
            }
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 15.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|(x, y)| format!("{:.1},{:.1}", px(*x), py(*y)))
            .collect();
        if path.is_empty() {
            continue;
        }
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, path.join(" "));
        for p in &path {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
        }
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly:.1}" font-size="10" fill="{color}">{}</text>"#, l + 10.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}
