use std::fmt::Write;

use super::{ErrorMetric, SweepSummary};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Line chart of mean error against outlier fraction, one series per noise
/// law, with ± one standard error bars. Self-contained SVG; with no summary
/// (or an empty one) only the axes are drawn.
pub fn render_svg(summary: Option<&SweepSummary>, metric: ErrorMetric) -> String {
    let series = summary.map(|s| s.per_noise.as_slice()).unwrap_or(&[]);
    let points = series.iter().flat_map(|s| &s.points);
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut any = false;
    for p in points {
        if !p.mean.is_finite() {
            continue;
        }
        any = true;
        x_hi = x_hi.max(p.fraction);
        x_lo = x_lo.min(p.fraction);
        y_hi = y_hi.max(p.mean + p.std_error);
        y_lo = y_lo.min(p.mean - p.std_error);
    }
    if !any || x_hi <= x_lo {
        x_hi = x_lo + 0.5;
    }
    if !any || y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    y_hi *= 1.05;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(sum) = summary {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&sum.estimator)
        );
    }
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2}" fill="none" stroke="black"/>"#,
        LEFT,
        TOP,
        LEFT,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    for t in nice_ticks(x_lo, x_hi) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0,
            label(t)
        );
    }
    for t in nice_ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">outlier fraction</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">mean {}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        metric.label()
    );

    for (k, ns) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<_> = ns.points.iter().filter(|p| p.mean.is_finite()).collect();
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.fraction), sy(p.mean))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for p in &pts {
            let (x, y0, y1) = (sx(p.fraction), sy(p.mean - p.std_error), sy(p.mean + p.std_error));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="{color}"/><circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sy(p.mean)
            );
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ns.noise)
        );
    }
    s.push_str("</svg>\n");
    s
}
