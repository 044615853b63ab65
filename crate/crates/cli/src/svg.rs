//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;

use dbmd_core::experiments::scaled_current;
use dbmd_core::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    /// Device voltage against asinh-scaled current.
    Hysteresis,
    /// Current against time.
    Step,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot plot an empty series")]
pub struct EmptySeries;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

pub fn render(series: &TimeSeries, style: PlotStyle) -> Result<String, EmptySeries> {
    if series.is_empty() {
        return Err(EmptySeries);
    }
    let pts: Vec<(f64, f64)> = series
        .samples
        .iter()
        .map(|s| match style {
            PlotStyle::Hysteresis => (s.u, scaled_current(s.i)),
            PlotStyle::Step => (s.t, s.i),
        })
        .collect();
    let (xlabel, ylabel) = match style {
        PlotStyle::Hysteresis => ("u / V", "asinh(i / 1 pA)"),
        PlotStyle::Step => ("t / s", "i / A"),
    };
    let (x0, x1) = span(pts.iter().map(|p| p.0));
    let (y0, y1) = span(pts.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
    let mut path = String::new();
    for (k, (x, y)) in pts.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "" } else { " " }, sx(*x), sy(*y));
    }
    writeln!(s, r#"<polyline fill="none" stroke="navy" stroke-width="1.5" points="{path}"/>"#).unwrap();
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{text}</text>"#
        )
        .unwrap();
    };
    label(&mut s, MARGIN, H - MARGIN + 16.0, "start", &format!("{x0:.3e}"));
    label(&mut s, W - MARGIN, H - MARGIN + 16.0, "end", &format!("{x1:.3e}"));
    label(&mut s, MARGIN - 6.0, H - MARGIN, "end", &format!("{y0:.3e}"));
    label(&mut s, MARGIN - 6.0, MARGIN + 4.0, "end", &format!("{y1:.3e}"));
    label(&mut s, W / 2.0, H - 16.0, "middle", xlabel);
    label(&mut s, MARGIN, MARGIN - 12.0, "start", ylabel);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Finite range, widened when degenerate.
fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}
