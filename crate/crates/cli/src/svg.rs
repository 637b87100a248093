//! Minimal SVG output: filled domains (even-odd, so holes stay empty) and
//! overlaid polylines.

use std::fmt::Write;

use num_complex::Complex64 as C64;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

pub struct Panel {
    pub title: String,
    /// Closed curves filled together with the even-odd rule.
    pub regions: Vec<Vec<C64>>,
    /// Open polylines drawn on top.
    pub paths: Vec<Vec<C64>>,
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in panel.regions.iter().chain(&panel.paths).flatten() {
        b.0 = b.0.min(z.re);
        b.1 = b.1.max(z.re);
        b.2 = b.2.min(z.im);
        b.3 = b.3.max(z.im);
    }
    if !b.0.is_finite() {
        return (-1.0, 1.0, -1.0, 1.0);
    }
    b
}

fn points(curve: &[C64], map: &impl Fn(C64) -> (f64, f64)) -> String {
    let mut s = String::new();
    for (i, z) in curve.iter().enumerate() {
        let (x, y) = map(*z);
        let _ = write!(s, "{}{x:.3},{y:.3}", if i == 0 { "M" } else { " L" });
    }
    s
}

/// One panel per coordinate plane, side by side.
pub fn render(panels: &[Panel]) -> String {
    let width = SIZE * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" viewBox=\"0 0 {width} {}\">",
        SIZE + 30.0,
        SIZE + 30.0
    );
    for (k, panel) in panels.iter().enumerate() {
        let (x0, x1, y0, y1) = bounds(panel);
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let offset = k as f64 * SIZE;
        let map = |z: C64| {
            (
                offset + SIZE / 2.0 + (z.re - cx) * scale,
                30.0 + SIZE / 2.0 - (z.im - cy) * scale,
            )
        };
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
            offset + MARGIN,
            panel.title
        );
        if !panel.regions.is_empty() {
            let d: Vec<String> = panel.regions.iter().map(|c| points(c, &map) + " Z").collect();
            let _ = writeln!(
                out,
                "<path d=\"{}\" fill=\"#9ecae1\" fill-rule=\"evenodd\" stroke=\"#08519c\" stroke-width=\"1\"/>",
                d.join(" ")
            );
        }
        for p in &panel.paths {
            let _ = writeln!(
                out,
                "<path d=\"{}\" fill=\"none\" stroke=\"#cb181d\" stroke-width=\"1.5\"/>",
                points(p, &map)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
