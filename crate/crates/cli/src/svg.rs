//! Minimal deterministic SVG charts: line charts with a legend and bar
//! charts, with "nice" axis ticks. Output depends only on the input values.

use std::fmt::Write;

const WIDTH: f64 = 860.0;
const MIN_HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 64.0;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Roughly `target` evenly spaced round values covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    let (lo, hi) = padded_range(lo, hi);
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).floor() as i64;
    let end = (hi / step).ceil() as i64;
    ((start..=end).map(|k| k as f64 * step).collect(), step)
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else if lo == 0.0 {
        (0.0, 1.0)
    } else {
        let pad = lo.abs() * 0.1;
        (lo - pad, hi + pad)
    }
}

fn label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize + 1 }.min(8);
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        format!("{:.decimals$}", 0.0)
    } else {
        s
    }
}

struct Frame {
    height: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn plot_w(&self) -> f64 {
        WIDTH - LEFT - RIGHT
    }

    fn plot_h(&self) -> f64 {
        self.height - TOP - BOTTOM
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * self.plot_w()
    }

    fn py(&self, y: f64) -> f64 {
        TOP + self.plot_h() - (y - self.y0) / (self.y1 - self.y0) * self.plot_h()
    }
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn y_axis(out: &mut String, f: &Frame, ticks: &[f64], step: f64, y_label: &str) {
    for &t in ticks {
        let y = f.py(t);
        let _ = writeln!(out, r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + f.plot_w());
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, label(t, step));
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + f.plot_h() / 2.0,
        TOP + f.plot_h() / 2.0,
        escape(y_label)
    );
}

fn axes_box(out: &mut String, f: &Frame) {
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        f.plot_w(),
        f.plot_h()
    );
}

/// Multi-series line chart with a legend on the right.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let (yticks, ystep) = nice_ticks(ymin, ymax, 6);
    let (xticks, xstep) = nice_ticks(xmin, xmax, 8);
    let height = MIN_HEIGHT.max(TOP + BOTTOM + 16.0 * series.len() as f64);
    let f = Frame {
        height,
        x0: xticks[0],
        x1: *xticks.last().unwrap(),
        y0: yticks[0],
        y1: *yticks.last().unwrap(),
    };
    let mut out = String::new();
    header(&mut out, height, title);
    y_axis(&mut out, &f, &yticks, ystep, y_label);
    for &t in &xticks {
        let x = f.px(t);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + f.plot_h() + 18.0, label(t, xstep));
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + f.plot_w() / 2.0,
        height - 16.0,
        escape(x_label)
    );
    axes_box(&mut out, &f);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let ly = TOP + 10.0 + 16.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#, lx + 18.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bar chart, one bar per label; zero-height bars are drawn as
/// empty rectangles so every label keeps its slot.
pub fn bar_chart(title: &str, y_label: &str, labels: &[String], values: &[f64]) -> String {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let ymin = finite.clone().fold(0.0, f64::min);
    let ymax = finite.fold(0.0, f64::max);
    let (yticks, ystep) = nice_ticks(ymin, ymax, 6);
    let f = Frame { height: MIN_HEIGHT, x0: 0.0, x1: labels.len().max(1) as f64, y0: yticks[0], y1: *yticks.last().unwrap() };
    let mut out = String::new();
    header(&mut out, f.height, title);
    y_axis(&mut out, &f, &yticks, ystep, y_label);
    axes_box(&mut out, &f);
    let slot = f.plot_w() / labels.len().max(1) as f64;
    let zero = f.py(0.0);
    for (k, (name, &v)) in labels.iter().zip(values).enumerate() {
        let v = if v.is_finite() { v } else { 0.0 };
        let x = LEFT + slot * k as f64 + slot * 0.1;
        let y = f.py(v);
        let (top, h) = if v >= 0.0 { (y, zero - y) } else { (zero, y - zero) };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{h:.2}" fill="{}"><title>{}: {}</title></rect>"#,
            slot * 0.8,
            PALETTE[0],
            escape(name),
            v
        );
        let cx = x + slot * 0.4;
        let ty = TOP + f.plot_h() + 12.0;
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{ty:.2}" font-size="10" text-anchor="end" transform="rotate(-60 {cx:.2} {ty:.2})">{}</text>"#,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
