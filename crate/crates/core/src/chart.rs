//! Minimal standalone SVG charts.

use std::fmt::Write as _;

use crate::backtest::EquityCurve;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn scale(v: f64, (lo, hi): (f64, f64), out_lo: f64, out_hi: f64) -> f64 {
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>
<line x1="{MARGIN}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>
"#,
        WIDTH / 2.0,
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN,
        HEIGHT - MARGIN,
    );
}

fn label(out: &mut String, x: f64, y: f64, anchor: &str, text: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{text}</text>"#
    );
}

/// Cumulative return line chart over the curve's dates.
pub fn equity_svg(curve: &EquityCurve, title: &str) -> String {
    let base = curve.initial();
    let cum: Vec<f64> = curve.equity.iter().map(|e| (e / base - 1.0) * 100.0).collect();
    let y_range = bounds(cum.iter().copied());
    let x_range = (0.0, (cum.len().max(2) - 1) as f64);

    let mut out = String::new();
    header(&mut out, title);
    let points: Vec<String> = cum
        .iter()
        .enumerate()
        .map(|(i, v)| {
            format!(
                "{:.2},{:.2}",
                scale(i as f64, x_range, MARGIN, WIDTH - MARGIN),
                scale(*v, y_range, HEIGHT - MARGIN, MARGIN)
            )
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
    if let (Some(first), Some(last)) = (curve.dates.first(), curve.dates.last()) {
        label(&mut out, MARGIN, HEIGHT - MARGIN + 16.0, "start", &first.to_string());
        label(&mut out, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end", &last.to_string());
    }
    label(&mut out, MARGIN - 4.0, MARGIN, "end", &format!("{:.1}%", y_range.1));
    label(&mut out, MARGIN - 4.0, HEIGHT - MARGIN, "end", &format!("{:.1}%", y_range.0));
    out.push_str("</svg>\n");
    out
}

/// Scatter of `(x, y)` points with axis captions.
pub fn scatter_svg(points: &[(f64, f64)], title: &str, x_label: &str, y_label: &str) -> String {
    let x_range = bounds(points.iter().map(|p| p.0));
    let y_range = bounds(points.iter().map(|p| p.1));
    let mut out = String::new();
    header(&mut out, title);
    for (x, y) in points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="firebrick" fill-opacity="0.7"/>"#,
            scale(*x, x_range, MARGIN, WIDTH - MARGIN),
            scale(*y, y_range, HEIGHT - MARGIN, MARGIN)
        );
    }
    label(&mut out, WIDTH / 2.0, HEIGHT - 12.0, "middle", x_label);
    label(&mut out, 14.0, HEIGHT / 2.0, "start", y_label);
    label(&mut out, MARGIN, HEIGHT - MARGIN + 16.0, "start", &format!("{:.4}", x_range.0));
    label(&mut out, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end", &format!("{:.4}", x_range.1));
    label(&mut out, MARGIN - 4.0, MARGIN, "end", &format!("{:.2}", y_range.1));
    label(&mut out, MARGIN - 4.0, HEIGHT - MARGIN, "end", &format!("{:.2}", y_range.0));
    out.push_str("</svg>\n");
    out
}
