//! Line charts of a summary metric against `log₂ d`, one polyline per solver.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::output::SummaryRow;
use crate::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Gap,
    Residual,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(Metric::Gap),
            "residual" => Ok(Metric::Residual),
            other => Err(BenchError::Usage(format!("unknown metric {other:?}; expected gap or residual"))),
        }
    }

    fn value(self, row: &SummaryRow) -> f64 {
        match self {
            Metric::Gap => row.final_gap,
            Metric::Residual => row.final_residual,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Gap => "averaged gap (f - f*)/Δ",
            Metric::Residual => "averaged residual",
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the final-iterate `metric` of every solver in `rows` as a
/// standalone SVG document. Non-finite values are skipped.
pub fn render_svg(rows: &[SummaryRow], metric: Metric) -> Result<String> {
    if rows.is_empty() {
        return Err(BenchError::Usage("summary has no rows to plot".into()));
    }
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let mut dims: Vec<usize> = Vec::new();
    for r in rows {
        if r.d == 0 {
            return Err(BenchError::Usage("dimension 0 in summary".into()));
        }
        dims.push(r.d);
        let v = metric.value(r);
        let pts = series.entry(r.solver.as_str()).or_default();
        if v.is_finite() {
            pts.push(((r.d as f64).log2(), v));
        }
    }
    dims.sort_unstable();
    dims.dedup();
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let xs: Vec<f64> = dims.iter().map(|&d| (d as f64).log2()).collect();
    let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 0.5, x_hi + 0.5) };
    let values: Vec<f64> = series.values().flatten().map(|p| p.1).collect();
    let y_hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let y_lo = values.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let (y_lo, y_hi) = if !y_hi.is_finite() {
        (0.0, 1.0)
    } else if y_hi > y_lo {
        (y_lo, y_hi + 0.05 * (y_hi - y_lo))
    } else {
        (y_lo - 0.5, y_hi + 0.5)
    };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} vs log2(d)</text>"#,
        LEFT + plot_w / 2.0,
        escape(metric.label())
    );
    let _ =
        writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

    let _ = writeln!(s, r#"<g class="x-ticks">"#);
    for (&d, &x) in dims.iter().zip(&xs) {
        let xp = px(x);
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{}" x2="{xp:.2}" y2="{}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(s, r#"<text x="{xp:.2}" y="{}" text-anchor="middle">{d}</text>"#, TOP + plot_h + 20.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">d (log scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );

    let _ = writeln!(s, r#"<g class="y-ticks">"#);
    for i in 0..=5 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
        let yp = py(y);
        let _ = writeln!(s, r#"<line x1="{}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{y:.3}</text>"#, LEFT - 8.0, yp + 4.0);
    }
    let _ = writeln!(s, "</g>");

    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-solver="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(name),
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
