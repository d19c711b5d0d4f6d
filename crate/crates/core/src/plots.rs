//! Minimal deterministic SVG charts: lines, points and bars on linear axes.
//!
//! Output depends only on the chart contents; all coordinates are written
//! with two decimals.

use std::fmt::Write as _;

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub x: f64,
    pub bottom: f64,
    pub top: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Line {
        name: String,
        points: Vec<(f64, f64)>,
        dashed: bool,
    },
    Points {
        name: String,
        points: Vec<(f64, f64)>,
    },
    Bars {
        name: String,
        bars: Vec<Bar>,
    },
}

impl Layer {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Layer::Line {
            name: name.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Layer::Line {
            name: name.into(),
            points,
            dashed: true,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Layer::Line { name, .. } | Layer::Points { name, .. } | Layer::Bars { name, .. } => {
                name
            }
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Layer::Line { points, .. } | Layer::Points { points, .. } => points.is_empty(),
            Layer::Bars { bars, .. } => bars.is_empty(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BarMode {
    /// Bar layers side by side at each x.
    #[default]
    Grouped,
    /// Every bar spans the full slot; used for stacked segments.
    Overlay,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub layers: Vec<Layer>,
    /// Extra text lines under the legend.
    pub notes: Vec<String>,
    pub bar_mode: BarMode,
    /// Draws a horizontal line at y = 0 when it is inside the range.
    pub zero_line: bool,
}

/// `"<slope> per year"` with three significant digits; exact zero and values
/// that round to zero print as `0.0`.
pub fn slope_label(slope: f64) -> String {
    if slope == 0.0 || !slope.is_finite() {
        return "0.0 per year".to_string();
    }
    let decimals = (2 - slope.abs().log10().floor() as i32).clamp(1, 15) as usize;
    let text = format!("{slope:.decimals$}");
    if text
        .trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        "0.0 per year".to_string()
    } else {
        format!("{text} per year")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_decimals(step: f64) -> usize {
    (-step.log10().floor()).max(0.0) as usize
}

/// Tick positions covering `[lo, hi]`, computed from integer multiples of
/// the step so values do not drift.
fn ticks(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    } else {
        let d = (hi - lo) * 0.05;
        (lo - d, hi + d)
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

impl Chart {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn layer(mut self, layer: Layer) -> Self {
        self.layers.push(layer);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(Layer::is_empty)
    }

    /// True when every x value is a whole number, e.g. calendar years.
    fn integral_x(&self) -> bool {
        self.layers.iter().all(|l| match l {
            Layer::Line { points, .. } | Layer::Points { points, .. } => {
                points.iter().all(|p| p.0.fract() == 0.0)
            }
            Layer::Bars { bars, .. } => bars.iter().all(|b| b.x.fract() == 0.0),
        })
    }

    fn bar_layers(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| matches!(l, Layer::Bars { .. }) && !l.is_empty())
            .count()
    }

    /// Half width of the slot a bar group occupies, in x units.
    fn slot(&self) -> f64 {
        let mut xs: Vec<f64> = self
            .layers
            .iter()
            .filter_map(|l| match l {
                Layer::Bars { bars, .. } => Some(bars.iter().map(|b| b.x)),
                _ => None,
            })
            .flatten()
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let gap = xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if gap.is_finite() {
            0.4 * gap
        } else {
            0.4
        }
    }

    fn frame(&self) -> Frame {
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let slot = self.slot();
        for l in &self.layers {
            match l {
                Layer::Line { points, .. } | Layer::Points { points, .. } => {
                    for &(x, y) in points {
                        x0 = x0.min(x);
                        x1 = x1.max(x);
                        y0 = y0.min(y);
                        y1 = y1.max(y);
                    }
                }
                Layer::Bars { bars, .. } => {
                    for b in bars {
                        x0 = x0.min(b.x - slot);
                        x1 = x1.max(b.x + slot);
                        y0 = y0.min(b.bottom.min(b.top)).min(0.0);
                        y1 = y1.max(b.bottom.max(b.top)).max(0.0);
                    }
                }
            }
        }
        let (x0, x1) = padded(x0, x1);
        let (y0, y1) = padded(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        if self.is_empty() {
            let _ = writeln!(
                s,
                r##"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="#7f7f7f">no data</text>"##,
                WIDTH / 2.0,
                HEIGHT / 2.0
            );
            s.push_str("</svg>\n");
            return s;
        }
        let f = self.frame();
        self.axes(&mut s, &f);
        let n_bars = self.bar_layers().max(1);
        let slot = self.slot();
        let mut bar_index = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            match layer {
                Layer::Line { points, dashed, .. } => {
                    let pts: Vec<String> = points
                        .iter()
                        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
                        .collect();
                    let dash = if *dashed {
                        r#" stroke-dasharray="6 4""#
                    } else {
                        ""
                    };
                    let _ = writeln!(
                        s,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#,
                        pts.join(" ")
                    );
                }
                Layer::Points { points, .. } => {
                    for &(x, y) in points {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#,
                            f.px(x),
                            f.py(y)
                        );
                    }
                }
                Layer::Bars { bars, .. } => {
                    if bars.is_empty() {
                        continue;
                    }
                    let (offset, width) = match self.bar_mode {
                        BarMode::Grouped => {
                            let w = 2.0 * slot / n_bars as f64;
                            (-slot + w * bar_index as f64, w)
                        }
                        BarMode::Overlay => (-slot, 2.0 * slot),
                    };
                    bar_index += 1;
                    for b in bars {
                        let xa = f.px(b.x + offset);
                        let xb = f.px(b.x + offset + width);
                        let (ya, yb) = (f.py(b.bottom.max(b.top)), f.py(b.bottom.min(b.top)));
                        let _ = writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                            xa,
                            ya,
                            xb - xa,
                            yb - ya
                        );
                    }
                }
            }
        }
        self.legend(&mut s);
        s.push_str("</svg>\n");
        s
    }

    fn axes(&self, s: &mut String, f: &Frame) {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            s,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444444"/>"##,
            r - l,
            b - t
        );
        let ystep = nice_step(f.y1 - f.y0, 5);
        let yd = tick_decimals(ystep);
        for y in ticks(f.y0, f.y1, ystep) {
            let py = f.py(y);
            let y = if y == 0.0 { 0.0 } else { y };
            let _ = writeln!(
                s,
                r##"<line x1="{l:.2}" y1="{py:.2}" x2="{r:.2}" y2="{py:.2}" stroke="#e0e0e0"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.yd$}</text>"#,
                l - 6.0,
                py + 4.0
            );
        }
        let mut xstep = nice_step(f.x1 - f.x0, 6);
        if self.integral_x() {
            xstep = xstep.max(1.0);
        }
        let xd = tick_decimals(xstep);
        for x in ticks(f.x0, f.x1, xstep) {
            let px = f.px(x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{b:.2}" x2="{px:.2}" y2="{:.2}" stroke="#444444"/>"##,
                b + 4.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.xd$}</text>"#,
                b + 18.0
            );
        }
        if self.zero_line && f.y0 < 0.0 && f.y1 > 0.0 {
            let py = f.py(0.0);
            let _ = writeln!(
                s,
                r##"<line x1="{l:.2}" y1="{py:.2}" x2="{r:.2}" y2="{py:.2}" stroke="#000000"/>"##
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(&self.y_label)
        );
    }

    fn legend(&self, s: &mut String) {
        let x = WIDTH - RIGHT + 14.0;
        let mut y = TOP + 8.0;
        for (i, layer) in self.layers.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{color}"/>"#,
                y - 10.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
                x + 18.0,
                escape(layer.name())
            );
            y += 18.0;
        }
        y += 8.0;
        for note in &self.notes {
            let _ = writeln!(
                s,
                r##"<text x="{x:.2}" y="{y:.2}" fill="#444444">{}</text>"##,
                escape(note)
            );
            y += 16.0;
        }
    }
}
