//! Minimal standalone SVG renderings of heatmaps and curves.

use std::fmt::Write as _;

use crate::morphology::{Descriptor, MAX_MODULES};

const CELL: f64 = 22.0;
const LOW: [f64; 3] = [247.0, 251.0, 255.0];
const HIGH: [f64; 3] = [8.0, 48.0, 107.0];
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c: Vec<u8> = (0..3).map(|i| (LOW[i] + (HIGH[i] - LOW[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Descriptor grid with rigid-module count upwards and joint count to the
/// right. Colours scale linearly from 0 to the largest value in the map.
pub fn heatmap(cells: &[(Descriptor, Option<f64>)], title: &str, label: &str) -> String {
    let n = MAX_MODULES as f64;
    let (left, top) = (50.0, 40.0);
    let width = left + n * CELL + 120.0;
    let height = top + n * CELL + 50.0;
    let max = cells.iter().filter_map(|c| c.1).fold(0.0f64, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(title));
    for (d, v) in cells {
        let x = left + d.j as f64 * CELL;
        let y = top + (n - d.m as f64) * CELL;
        let fill = match v {
            Some(v) if max > 0.0 => ramp(v / max),
            Some(_) => ramp(0.0),
            None => "#e0e0e0".to_string(),
        };
        let _ = write!(s, r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white" stroke-width="0.5">"#);
        let _ = writeln!(s, "<title>m={} j={}: {}</title></rect>", d.m, d.j, v.map_or("empty".into(), |v| format!("{v:.4}")));
    }
    for k in (0..MAX_MODULES).step_by(5) {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{k}</text>"#, left + (k as f64 + 0.5) * CELL, top + n * CELL + 14.0);
        let m = k + 1;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{m}</text>"#, left - 4.0, top + (n - m as f64 + 0.7) * CELL);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">joints (j)</text>"#, left + n * CELL / 2.0, top + n * CELL + 32.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">rigid modules (m)</text>"#, top + n * CELL / 2.0, top + n * CELL / 2.0);
    // legend
    let lx = left + n * CELL + 30.0;
    let steps = 20;
    let bar = n * CELL * 0.6;
    for i in 0..steps {
        let t = 1.0 - i as f64 / (steps - 1) as f64;
        let y = top + i as f64 * bar / steps as f64;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{y}" width="16" height="{}" fill="{}"/>"#, bar / steps as f64 + 0.5, ramp(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">{max:.3}</text>"#, lx + 20.0, top + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">0</text>"#, lx + 20.0, top + bar);
    let _ = writeln!(s, r##"<rect x="{lx}" y="{}" width="16" height="12" fill="#e0e0e0"/><text x="{}" y="{}">empty</text>"##, top + bar + 14.0, lx + 20.0, top + bar + 24.0);
    let _ = writeln!(s, r#"<text x="{lx}" y="{}">{}</text>"#, top + bar + 44.0, escape(label));
    s.push_str("</svg>\n");
    s
}

pub struct Curve {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

/// Line chart of one or more curves, each with an optional shaded band.
pub fn curves(series: &[Curve], title: &str, x_label: &str, y_label: &str) -> String {
    let (w, h) = (560.0, 320.0);
    let (left, top, plot_w, plot_h) = (60.0, 30.0, 440.0, 240.0);
    let all_x = series.iter().flat_map(|c| c.xs.iter().copied());
    let (x0, x1) = all_x.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let all_y = series.iter().flat_map(|c| {
        c.ys.iter().copied().chain(c.band.iter().flat_map(|(lo, hi)| lo.iter().chain(hi).copied()))
    });
    let (y0, y1) = all_y.fold((0.0f64, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (x0, x1) = if x0.is_finite() && x1 > x0 { (x0, x1) } else { (0.0, 1.0) };
    let y1 = if y1 > y0 { y1 } else { y0 + 1.0 };
    let px = |x: f64| left + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| top + plot_h - (y - y0) / (y1 - y0) * plot_h;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{left}" y="18" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
    for (i, c) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some((lo, hi)) = &c.band {
            let mut pts: Vec<String> = c.xs.iter().zip(hi).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
            pts.extend(c.xs.iter().zip(lo).rev().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))));
            let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
        }
        let pts: Vec<String> = c.xs.iter().zip(&c.ys).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = top + 12.0 + i as f64 * 14.0;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, left + plot_w + 8.0, escape(&c.label));
    }
    let _ = writeln!(s, r#"<text x="{left}" y="{}">{x0}</text>"#, top + plot_h + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{x1}</text>"#, left + plot_w, top + plot_h + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + plot_w / 2.0, top + plot_h + 28.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, left - 4.0, top + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, left - 4.0, top + plot_h);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, top + plot_h / 2.0, top + plot_h / 2.0, escape(y_label));
    s.push_str("</svg>\n");
    s
}
