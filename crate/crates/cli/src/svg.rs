//! Minimal SVG rendering for time series and 2-D fields.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: &[&str] = &[
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Curve<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub struct LinePlot<'a> {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Displayed x is the data x divided by this, e.g. 1000 for `ω_b t / k`.
    pub x_scale: f64,
    pub curves: Vec<Curve<'a>>,
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

impl LinePlot<'_> {
    pub fn render(&self) -> String {
        let scale = if self.x_scale > 0.0 { self.x_scale } else { 1.0 };
        let (x0, x1) = bounds(self.curves.iter().flat_map(|c| c.x.iter()));
        let (x0, x1) = (x0 / scale, x1 / scale);
        let (mut y0, mut y1) = bounds(self.curves.iter().flat_map(|c| c.y.iter()));
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let xs = nice_step(x1 - x0, 6);
        let mut t = (x0 / xs).ceil() * xs;
        while t <= x1 + 1e-9 * xs {
            let x = px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                fmt_tick(t)
            );
            t += xs;
        }
        let ys = nice_step(y1 - y0, 5);
        let mut t = (y0 / ys).ceil() * ys;
        while t <= y1 + 1e-9 * ys {
            let y = py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                fmt_tick(t)
            );
            t += ys;
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, c) in self.curves.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut d = String::new();
            let mut pen_down = false;
            for (&x, &y) in c.x.iter().zip(c.y) {
                if !(x.is_finite() && y.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(
                    d,
                    "{}{:.2},{:.2} ",
                    if pen_down { "L" } else { "M" },
                    px(x / scale),
                    py(y)
                );
                pen_down = true;
            }
            let _ = writeln!(
                s,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                d.trim_end()
            );
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 22.0,
                lx + 28.0,
                ly + 4.0,
                escape(&c.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Colour map for a signed field: blue below zero, red above, white at zero.
fn diverging(v: f64, limit: f64) -> String {
    let u = (v / limit).clamp(-1.0, 1.0);
    let fade = |u: f64| (255.0 * (1.0 - u.abs())).round() as u8;
    if u >= 0.0 {
        format!("#ff{:02x}{:02x}", fade(u), fade(u))
    } else {
        format!("#{:02x}{:02x}ff", fade(u), fade(u))
    }
}

/// Heat map of `values[row][col]` with row 0 drawn at the bottom when
/// `origin_lower` is set (phase-space convention) and at the top otherwise
/// (matrix convention).
pub struct HeatMap<'a> {
    pub title: String,
    pub values: &'a [Vec<f64>],
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub origin_lower: bool,
}

impl HeatMap<'_> {
    pub fn render(&self) -> String {
        let rows = self.values.len();
        let cols = self.values.first().map_or(0, Vec::len);
        let size = 420.0;
        let (cw, ch) = (size / cols.max(1) as f64, size / rows.max(1) as f64);
        let limit = self
            .values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let (left, top) = (70.0, 40.0);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="10">"#,
            size + left + 30.0,
            size + top + 60.0
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            left + size / 2.0,
            escape(&self.title)
        );
        for (i, row) in self.values.iter().enumerate() {
            let r = if self.origin_lower { rows - 1 - i } else { i };
            for (j, &v) in row.iter().enumerate() {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    left + j as f64 * cw,
                    top + r as f64 * ch,
                    cw + 0.05,
                    ch + 0.05,
                    diverging(v, limit)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
        );
        let stride = |n: usize| (n / 8).max(1);
        for (i, label) in self.row_labels.iter().enumerate().step_by(stride(rows)) {
            let r = if self.origin_lower { rows - 1 - i } else { i };
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 4.0,
                top + (r as f64 + 0.5) * ch + 3.0,
                escape(label)
            );
        }
        for (j, label) in self.col_labels.iter().enumerate().step_by(stride(cols)) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                left + (j as f64 + 0.5) * cw,
                top + size + 14.0,
                escape(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">colour scale ±{}</text>"#,
            left + size / 2.0,
            top + size + 40.0,
            fmt_tick(limit)
        );
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let x = [0.0, 1000.0, 2000.0];
        let y = [0.0, 0.5, f64::NAN];
        let svg = LinePlot {
            title: "P & Q".into(),
            x_label: "t".into(),
            y_label: "P".into(),
            x_scale: 1000.0,
            curves: vec![Curve {
                label: "<g,2>".into(),
                x: &x,
                y: &y,
            }],
        }
        .render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("P &amp; Q") && svg.contains("&lt;g,2&gt;"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_step(10.0, 5), 2.0);
        assert_eq!(nice_step(1.2, 6), 0.2);
        assert_eq!(fmt_tick(0.30000000000000004), "0.3");
    }

    #[test]
    fn diverging_endpoints() {
        assert_eq!(diverging(1.0, 1.0), "#ff0000");
        assert_eq!(diverging(-1.0, 1.0), "#0000ff");
        assert_eq!(diverging(0.0, 1.0), "#ffffff");
    }
}
