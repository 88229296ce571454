//! Minimal standalone SVG renderings of the RMI curve and the co-membership
//! heatmap.

use std::fmt::Write;

use crate::blocks::MergeTrace;
use crate::comembership::CoMatrix;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;

/// Mean RMI against the number of blocks, with the maximum marked.
pub fn rmi_curve(trace: &MergeTrace) -> String {
    let pts = trace.curve();
    let q_max = pts.iter().map(|p| p.0).max().unwrap_or(1).max(2) as f64;
    let (lo, hi) = pts
        .iter()
        .fold((0.0f64, 0.0f64), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |q: usize| PAD + (q as f64 - 1.0) / (q_max - 1.0) * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - (v - lo) / span * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let path: Vec<String> = pts.iter().map(|&(q, v)| format!("{:.2},{:.2}", x(q), y(v))).collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#,
        path.join(" ")
    );
    let best = trace.best_entry();
    let _ = writeln!(
        s,
        r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="crimson"/>"#,
        x(best.q),
        y(best.mean_rmi)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">number of blocks q (max at {})</text>"#,
        W / 2.0,
        H - 10.0,
        best.q
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})" text-anchor="middle">mean RMI</text>"#,
        H / 2.0,
        H / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Grey-scale heatmap, rows and columns in `order`.
pub fn heatmap(matrix: &CoMatrix, order: &[usize]) -> String {
    let n = order.len().max(1);
    let cell = (600.0 / n as f64).max(1.0);
    let side = cell * n as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{side}" height="{side}" viewBox="0 0 {side} {side}" shape-rendering="crispEdges">"#);
    let _ = writeln!(s, r#"<rect width="{side}" height="{side}" fill="white"/>"#);
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            let v = matrix.get(i, j);
            if v <= 0.0 {
                continue;
            }
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},{shade})"/>"#,
                c as f64 * cell,
                r as f64 * cell
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
