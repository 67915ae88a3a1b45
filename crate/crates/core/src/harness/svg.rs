//! Static SVG convergence chart: normalized rate against `n` on a log axis.

use std::fmt::Write;

use crate::harness::config::Estimator;
use crate::harness::study::StudyRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_Y: f64 = 40.0;

fn color(est: Estimator) -> &'static str {
    match est {
        Estimator::Naive => "#1f77b4",
        Estimator::LargestJump => "#d62728",
    }
}

/// Render the chart, or `None` when fewer than two rows are given.
///
/// One polyline per estimator (points with a non-finite rate are dropped)
/// and one dashed `class="reference"` polyline at the predicted rate.
pub fn emit_svg(rows: &[StudyRow]) -> Option<String> {
    if rows.len() < 2 {
        return None;
    }
    let reference = rows[0].predicted_rate;
    let finite: Vec<&StudyRow> = rows
        .iter()
        .filter(|r| r.normalized_rate.is_finite() && r.n > 0)
        .collect();

    let (mut lo_n, mut hi_n) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        let v = (r.n.max(1) as f64).log10();
        (lo.min(v), hi.max(v))
    });
    if hi_n - lo_n < 1e-9 {
        lo_n -= 0.5;
        hi_n += 0.5;
    }
    let (mut lo_y, mut hi_y) = finite
        .iter()
        .map(|r| r.normalized_rate)
        .chain(std::iter::once(reference).filter(|v| v.is_finite()))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo_y.is_finite() {
        lo_y = -1.0;
        hi_y = 0.0;
    }
    let pad = ((hi_y - lo_y) * 0.08).max(0.05);
    lo_y -= pad;
    hi_y += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let px = |n: u64| MARGIN_LEFT + ((n.max(1) as f64).log10() - lo_n) / (hi_n - lo_n) * plot_w;
    let py = |v: f64| MARGIN_Y + (hi_y - v) / (hi_y - lo_y) * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "<title>normalized rate a_max^r log p versus n</title>");
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, x1, y0, y1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT, MARGIN_Y, HEIGHT - MARGIN_Y);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black" stroke-width="1"><line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"#
    );

    let _ = writeln!(s, r#"<g class="ticks" font-family="sans-serif" font-size="11">"#);
    let mut decade = lo_n.ceil() as i32;
    while f64::from(decade) <= hi_n + 1e-9 {
        let x = MARGIN_LEFT + (f64::from(decade) - lo_n) / (hi_n - lo_n) * plot_w;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{decade}</text>"#,
            y1 + 5.0,
            y1 + 18.0
        );
        decade += 1;
    }
    for k in 0..=4 {
        let v = lo_y + (hi_y - lo_y) * f64::from(k) / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">n (log scale)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );

    if reference.is_finite() {
        let y = py(reference);
        let _ = writeln!(
            s,
            r##"<polyline class="reference" points="{x0:.2},{y:.4} {x1:.2},{y:.4}" fill="none" stroke="#555555" stroke-dasharray="6,4"><title>{reference:.16e}</title></polyline>"##
        );
        let _ = writeln!(
            s,
            r#"<text class="reference-label" x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">predicted {reference:.4}</text>"#,
            x1 + 6.0,
            y + 4.0
        );
    }

    let mut legend_y = MARGIN_Y + 12.0;
    for est in [Estimator::Naive, Estimator::LargestJump] {
        let pts: Vec<&&StudyRow> = finite.iter().filter(|r| r.estimator == est).collect();
        if pts.is_empty() {
            continue;
        }
        let points: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.2},{:.4}", px(r.n), py(r.normalized_rate)))
            .collect();
        let c = color(est);
        let _ = writeln!(
            s,
            r#"<polyline class="estimate {}" points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            est.as_str(),
            points.join(" ")
        );
        for r in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.4}" r="3" fill="{c}"/>"#,
                px(r.n),
                py(r.normalized_rate)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{legend_y:.2}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
            x1 + 6.0,
            est.as_str()
        );
        legend_y += 16.0;
    }
    let _ = writeln!(s, "</svg>");
    Some(s)
}
