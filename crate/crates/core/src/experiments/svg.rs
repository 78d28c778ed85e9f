//! A small SVG writer for grouped box plots and bar charts.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One box: whiskers, box edges and centre line, in data units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxShape {
    pub whisker_low: f64,
    pub low: f64,
    pub mid: f64,
    pub high: f64,
    pub whisker_high: f64,
}

impl BoxShape {
    /// Quartile box with whiskers at the furthest samples within 1.5 IQR.
    pub fn quartiles(samples: &[f64], q1: f64, median: f64, q3: f64) -> Self {
        let iqr = q3 - q1;
        let lo_fence = q1 - 1.5 * iqr;
        let hi_fence = q3 + 1.5 * iqr;
        let whisker_low = samples.iter().copied().filter(|&x| x >= lo_fence).fold(q1, f64::min);
        let whisker_high = samples.iter().copied().filter(|&x| x <= hi_fence).fold(q3, f64::max);
        Self { whisker_low, low: q1, mid: median, high: q3, whisker_high }
    }

    /// Box spanning mean ± sd, without whiskers.
    pub fn mean_sd(mean: f64, sd: f64) -> Self {
        Self { whisker_low: mean - sd, low: mean - sd, mid: mean, high: mean + sd, whisker_high: mean + sd }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    lo: f64,
    hi: f64,
}

impl Frame {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 {
            lo -= 0.5 * lo.abs().max(1e-3);
            hi += 0.5 * hi.abs().max(1e-3);
        }
        let pad = 0.05 * (hi - lo);
        Self { lo: lo - pad, hi: hi + pad }
    }

    fn y(&self, v: f64) -> f64 {
        let plot = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + plot * (1.0 - (v - self.lo) / (self.hi - self.lo))
    }
}

fn header(out: &mut String, title: &str, y_label: &str, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{:.2}" x2="{x0}" y2="{:.2}" stroke="black"/>"#,
        MARGIN_TOP,
        HEIGHT - MARGIN_BOTTOM
    );
    let _ = writeln!(
        out,
        r#"<line x1="{x0}" y1="{:.2}" x2="{x1}" y2="{:.2}" stroke="black"/>"#,
        HEIGHT - MARGIN_BOTTOM,
        HEIGHT - MARGIN_BOTTOM
    );
    for k in 0..=4 {
        let v = frame.lo + (frame.hi - frame.lo) * k as f64 / 4.0;
        let y = frame.y(v);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.4}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, series: &[String]) {
    for (k, name) in series.iter().enumerate() {
        let x = MARGIN_LEFT + 10.0 + 130.0 * k as f64;
        let y = HEIGHT - 14.0;
        let colour = PALETTE[k % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{colour}"/>"#, y - 9.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 14.0, escape(name));
    }
}

/// Grouped box plot: one group per x label, one box per series in each.
pub fn box_plot(title: &str, y_label: &str, series: &[String], groups: &[(String, Vec<BoxShape>)]) -> String {
    let frame = Frame::new(groups.iter().flat_map(|(_, b)| b.iter().flat_map(|s| [s.whisker_low, s.whisker_high])));
    let mut out = String::new();
    header(&mut out, title, y_label, &frame);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let group_w = plot_w / groups.len().max(1) as f64;
    let box_w = (group_w * 0.7 / series.len().max(1) as f64).min(40.0);
    for (g, (label, boxes)) in groups.iter().enumerate() {
        let centre = MARGIN_LEFT + group_w * (g as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{centre:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            escape(label)
        );
        for (k, b) in boxes.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            let x = centre + box_w * (k as f64 - boxes.len() as f64 / 2.0);
            let xm = x + box_w / 2.0;
            let (top, bottom) = (frame.y(b.high), frame.y(b.low));
            let _ = writeln!(
                out,
                r#"<line x1="{xm:.2}" y1="{:.2}" x2="{xm:.2}" y2="{:.2}" stroke="{colour}"/>"#,
                frame.y(b.whisker_high),
                frame.y(b.whisker_low)
            );
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="{colour}"/>"#,
                x + 2.0,
                box_w - 4.0,
                (bottom - top).max(0.5)
            );
            let ym = frame.y(b.mid);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{ym:.2}" x2="{:.2}" y2="{ym:.2}" stroke="{colour}" stroke-width="2"/>"#,
                x + 2.0,
                x + box_w - 2.0
            );
        }
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

/// Grouped bar chart: one group per label, one bar per series.
pub fn bar_chart(title: &str, y_label: &str, series: &[String], groups: &[(String, Vec<f64>)]) -> String {
    let frame = Frame::new(groups.iter().flat_map(|(_, v)| v.iter().copied()).chain(std::iter::once(0.0)));
    let mut out = String::new();
    header(&mut out, title, y_label, &frame);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = (group_w * 0.7 / series.len().max(1) as f64).min(60.0);
    let base = frame.y(0.0);
    for (g, (label, values)) in groups.iter().enumerate() {
        let centre = MARGIN_LEFT + group_w * (g as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{centre:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            escape(label)
        );
        for (k, &v) in values.iter().enumerate() {
            let x = centre + bar_w * (k as f64 - values.len() as f64 / 2.0);
            let y = frame.y(v);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x + 2.0,
                y.min(base),
                bar_w - 4.0,
                (base - y).abs(),
                PALETTE[k % PALETTE.len()]
            );
        }
    }
    legend(&mut out, series);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whiskers_stop_at_fences() {
        let samples = [1.0, 2.0, 3.0, 4.0, 100.0];
        let b = BoxShape::quartiles(&samples, 2.0, 3.0, 4.0);
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 4.0));
    }

    #[test]
    fn documents_are_well_formed() {
        let series = vec!["a<b".to_string(), "c".to_string()];
        let groups = vec![("625".to_string(), vec![BoxShape::mean_sd(0.5, 0.1), BoxShape::mean_sd(0.4, 0.0)])];
        let svg = box_plot("t", "D/n", &series, &groups);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<rect").count(), 1 + 2 + 2);
        let bars = bar_chart("t", "y", &series, &[("x".into(), vec![0.2, -0.1])]);
        assert!(bars.ends_with("</svg>\n"));
    }
}
