//! Minimal SVG charts: a line chart and a per-group strip chart.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

/// Pads `[lo, hi]` and snaps to a 0.01 grid.
fn y_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.1).max(0.01);
    (((lo - pad) * 100.0).floor() / 100.0, ((hi + pad) * 100.0).ceil() / 100.0)
}

fn axes(out: &mut String, f: &Frame, title: &str, xlabel: &str, ylabel: &str, xticks: &[(f64, String)]) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    for i in 0..=5 {
        let v = f.y.0 + (f.y.1 - f.y.0) * i as f64 / 5.0;
        let y = f.py(v);
        let _ = writeln!(out, r##"<line x1="{x0}" y1="{y:.1}" x2="{x1}" y2="{y:.1}" stroke="#ddd"/>"##);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, y + 4.0);
    }
    for (v, label) in xticks {
        let x = f.px(*v);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y1 + 18.0, escape(label));
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 16.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 14.0;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{x}" y="{:.1}" width="12" height="12" fill="{c}"/>"#, y - 10.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(name));
    }
}

/// One polyline with markers per series over shared integer x positions.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], series: &[(&str, Vec<f64>)]) -> String {
    let f = Frame {
        x: (xs.first().copied().unwrap_or(0.0) - 0.5, xs.last().copied().unwrap_or(1.0) + 0.5),
        y: y_range(series.iter().flat_map(|s| s.1.iter().copied())),
    };
    let ticks: Vec<(f64, String)> = xs.iter().map(|&x| (x, format!("{x}"))).collect();
    let mut out = String::new();
    axes(&mut out, &f, title, xlabel, ylabel, &ticks);
    for (i, (_, ys)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = xs.iter().zip(ys).map(|(&x, &y)| format!("{:.1},{:.1}", f.px(x), f.py(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, pts.join(" "));
        for (&x, &y) in xs.iter().zip(ys) {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{c}"/>"#, f.px(x), f.py(y));
        }
    }
    legend(&mut out, &series.iter().map(|s| s.0).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Points per group with a min–max whisker and a median tick.
pub fn strip_chart(title: &str, xlabel: &str, ylabel: &str, groups: &[(String, Vec<f64>)]) -> String {
    let f = Frame {
        x: (0.5, groups.len() as f64 + 0.5),
        y: y_range(groups.iter().flat_map(|g| g.1.iter().copied())),
    };
    let ticks: Vec<(f64, String)> = groups.iter().enumerate().map(|(i, g)| ((i + 1) as f64, g.0.clone())).collect();
    let mut out = String::new();
    axes(&mut out, &f, title, xlabel, ylabel, &ticks);
    for (i, (_, vals)) in groups.iter().enumerate() {
        if vals.is_empty() {
            continue;
        }
        let cx = f.px((i + 1) as f64);
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
        };
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let _ = writeln!(out, r##"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="#555"/>"##, f.py(lo), f.py(hi));
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#d62728" stroke-width="3"/>"##,
            cx - 14.0,
            f.py(median),
            cx + 14.0,
            f.py(median)
        );
        let n = vals.len();
        for (j, &v) in vals.iter().enumerate() {
            // Deterministic horizontal spread.
            let dx = if n > 1 { (j as f64 / (n - 1) as f64 - 0.5) * 18.0 } else { 0.0 };
            let _ = writeln!(out, r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#1f77b4" fill-opacity="0.6"/>"##, cx + dx, f.py(v));
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_has_one_polyline_per_series() {
        let s = line_chart("t", "k", "acc", &[1.0, 2.0, 3.0], &[("a", vec![0.9, 0.95, 0.97]), ("b", vec![0.8, 0.85, 0.9])]);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s.matches("<circle").count(), 6);
    }

    #[test]
    fn strip_chart_escapes_and_draws_points() {
        let s = strip_chart("a<b", "k", "auc", &[("1".into(), vec![0.5, 0.7]), ("2".into(), vec![])]);
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
