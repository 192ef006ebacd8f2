//! Static SVG line plots: polylines over linear or logarithmic axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

impl Plot<'_> {
    fn y_of(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log_y && v <= 0.0) {
            None
        } else if self.log_y {
            Some(v.log10())
        } else {
            Some(v)
        }
    }

    pub fn render(&self, series: &[Series]) -> String {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        for s in series {
            for &(x, y) in &s.points {
                if let (true, Some(y)) = (x.is_finite(), self.y_of(y)) {
                    xs = (xs.0.min(x), xs.1.max(x));
                    ys = (ys.0.min(y), ys.1.max(y));
                }
            }
        }
        if !xs.0.is_finite() {
            xs = (0.0, 1.0);
            ys = (0.0, 1.0);
        }
        if xs.1 - xs.0 <= 0.0 {
            xs = (xs.0 - 0.5, xs.1 + 0.5);
        }
        if ys.1 - ys.0 <= 0.0 {
            ys = (ys.0 - 0.5, ys.1 + 0.5);
        }
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let px = |x: f64| LEFT + (x - xs.0) / (xs.1 - xs.0) * pw;
        let py = |y: f64| TOP + ph - (y - ys.0) / (ys.1 - ys.0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=TICKS {
            let f = k as f64 / TICKS as f64;
            let xv = xs.0 + f * (xs.1 - xs.0);
            let yv = ys.0 + f * (ys.1 - ys.0);
            let (x, y) = (px(xv), py(yv));
            let ylab = if self.log_y { 10f64.powf(yv) } else { yv };
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                tick_label(xv)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0,
                tick_label(ylab)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(self.y_label)
        );
        for (k, s) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            // break the line where values cannot be drawn
            let mut segments: Vec<Vec<String>> = vec![Vec::new()];
            for &(x, y) in &s.points {
                match (x.is_finite(), self.y_of(y)) {
                    (true, Some(y)) => {
                        segments
                            .last_mut()
                            .unwrap()
                            .push(format!("{:.2},{:.2}", px(x), py(y)))
                    }
                    _ => segments.push(Vec::new()),
                }
            }
            for seg in segments.iter().filter(|s| !s.is_empty()) {
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                    seg.join(" ")
                );
            }
            let ly = TOP + 14.0 + 14.0 * k as f64;
            let lx = LEFT + pw - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
                ly - 4.0,
                lx + 20.0,
                ly - 4.0,
                lx + 25.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
