//! SVG 1.1 plots with elements emitted in input order.

use std::fmt::Write as _;

use volbias_core::energy::OUTLIER;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#aec7e8", "#ffbb78",
];

/// Color of a label; the outlier label is black.
pub fn label_color(label: usize) -> &'static str {
    if label == OUTLIER {
        "#000000"
    } else {
        PALETTE[label % PALETTE.len()]
    }
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
    )
}

/// Scatter plot of labeled points, y axis pointing up. Labels are renumbered
/// in order of first appearance so colors stay distinct.
pub fn scatter(points: &[[f64; 2]], labels: &[usize], size: f64) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let margin = 10.0;
    let scale = (size - 2.0 * margin) / span;
    let mut order: Vec<usize> = Vec::new();
    let mut s = header(size, size);
    for (p, &l) in points.iter().zip(labels) {
        let c = if l == OUTLIER {
            label_color(OUTLIER)
        } else {
            let idx = order.iter().position(|&o| o == l).unwrap_or_else(|| {
                order.push(l);
                order.len() - 1
            });
            label_color(idx)
        };
        let cx = margin + (p[0] - x0) * scale;
        let cy = size - margin - (p[1] - y0) * scale;
        let _ = writeln!(s, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2\" fill=\"{c}\"/>");
    }
    s.push_str("</svg>\n");
    s
}

/// Bar chart of counts; the last bar is drawn black when `last_is_outlier`.
pub fn histogram(counts: &[usize], last_is_outlier: bool) -> String {
    let (w, h, margin) = (40.0 + 24.0 * counts.len() as f64, 220.0, 20.0);
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut s = header(w, h);
    for (i, &c) in counts.iter().enumerate() {
        let bh = (h - 2.0 * margin) * c as f64 / top;
        let x = margin + 24.0 * i as f64;
        let color = if last_is_outlier && i + 1 == counts.len() { label_color(OUTLIER) } else { label_color(i) };
        let _ = writeln!(s, "<rect x=\"{x:.1}\" y=\"{:.2}\" width=\"20\" height=\"{bh:.2}\" fill=\"{color}\"/>", h - margin - bh);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"middle\">{c}</text>", x + 10.0, h - margin - bh - 3.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_deterministic_and_well_formed() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]];
        let labels = [3, OUTLIER, 3];
        let a = scatter(&pts, &labels, 200.0);
        assert_eq!(a, scatter(&pts, &labels, 200.0));
        assert_eq!(a.matches("<circle").count(), 3);
        assert!(a.contains("#000000"));
        assert!(a.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn histogram_has_one_bar_per_count() {
        let s = histogram(&[5, 0, 2], true);
        assert_eq!(s.matches("<rect").count(), 4);
    }
}
