//! SVG rendering of confusion matrices and counting-accuracy box plots.

use std::fmt::Write;

use crate::pipeline::SourceSummary;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// White-to-blue ramp for a value in [0, 1].
fn shade(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 - 222.0 * v).round() as u8;
    let g = (255.0 - 160.0 * v).round() as u8;
    let b = (255.0 - 75.0 * v).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heatmap with rows as true classes, shaded by row-normalized rate and
/// annotated with raw counts.
pub fn confusion_svg(title: &str, classes: &[String], m: &[Vec<u64>]) -> String {
    let n = classes.len();
    let cell = 36.0;
    let left = 20.0 + 7.0 * classes.iter().map(|c| c.len()).max().unwrap_or(1) as f64;
    let top = 60.0;
    let width = left + cell * n as f64 + 20.0;
    let height = top + cell * n as f64 + left;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" font-size="14">{}</text>"#, left, esc(title));
    let _ = writeln!(s, r#"<text x="{:.1}" y="40">predicted</text>"#, left);
    for (i, row) in m.iter().enumerate() {
        let total: u64 = row.iter().sum();
        for (j, &c) in row.iter().enumerate() {
            let rate = if total > 0 { c as f64 / total as f64 } else { 0.0 };
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            let _ = writeln!(
                s,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{}" stroke="#999"/>"##,
                shade(rate)
            );
            let ink = if rate > 0.6 { "#fff" } else { "#000" };
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{ink}">{c}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    for (i, c) in classes.iter().enumerate() {
        let y = top + cell * i as f64 + cell / 2.0 + 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{}</text>"#, left - 4.0, esc(c));
        let x = left + cell * i as f64 + cell / 2.0;
        let yb = top + cell * n as f64 + 6.0;
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{yb:.1}" transform="rotate(60 {x:.1} {yb:.1})">{}</text>"#,
            esc(c)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One box per source: whiskers at min/max, box from q1 to q3, median line
/// and mean marker, on an accuracy axis from `lo` to 1.
pub fn count_box_svg(title: &str, summaries: &[SourceSummary]) -> String {
    let lo = summaries
        .iter()
        .map(|s| s.accuracy.min)
        .fold(0.0f64, f64::min)
        .max(-1.0);
    let (w_box, gap, top, plot_h, left) = (40.0, 30.0, 40.0, 240.0, 50.0);
    let width = left + (w_box + gap) * summaries.len().max(1) as f64 + gap;
    let height = top + plot_h + 50.0;
    let y = |v: f64| top + plot_h * (1.0 - (v - lo) / (1.0 - lo).max(1e-9));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left:.1}" y="20" font-size="14">{}</text>"#, esc(title));
    let _ = writeln!(
        s,
        r##"<line x1="{left:.1}" y1="{:.1}" x2="{left:.1}" y2="{:.1}" stroke="#000"/>"##,
        y(1.0),
        y(lo)
    );
    for tick in 0..=4 {
        let v = lo + (1.0 - lo) * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            left - 4.0,
            y(v) + 4.0
        );
    }
    for (k, sm) in summaries.iter().enumerate() {
        let a = &sm.accuracy;
        let x0 = left + gap + (w_box + gap) * k as f64;
        let xc = x0 + w_box / 2.0;
        let _ = writeln!(
            s,
            r##"<line x1="{xc:.1}" y1="{:.1}" x2="{xc:.1}" y2="{:.1}" stroke="#333"/>"##,
            y(a.max),
            y(a.min)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.1}" y="{:.1}" width="{w_box:.1}" height="{:.1}" fill="#9ecae1" stroke="#333"/>"##,
            y(a.q3),
            (y(a.q1) - y(a.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.1}" y1="{m:.1}" x2="{:.1}" y2="{m:.1}" stroke="#000" stroke-width="2"/>"##,
            x0 + w_box,
            m = y(a.median)
        );
        let _ = writeln!(s, r##"<circle cx="{xc:.1}" cy="{:.1}" r="3" fill="#d62728"/>"##, y(a.mean));
        let _ = writeln!(
            s,
            r#"<text x="{xc:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            top + plot_h + 18.0,
            esc(&sm.source)
        );
    }
    s.push_str("</svg>\n");
    s
}
