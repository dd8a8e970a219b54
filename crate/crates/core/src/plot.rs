//! Minimal SVG writer: line plots with optional log axes, vertical markers,
//! and a labelled heat map.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Self { label: label.into(), points: x.iter().copied().zip(y.iter().copied()).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct Marker {
    pub x: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Ticks at 1, 2 or 5 times a power of ten.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Self { log, lo, hi }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log { v.log10() } else { v };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i64;
            (self.lo as i64..=self.hi as i64)
                .step_by(step as usize)
                .map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect()
        } else {
            linear_ticks(self.lo, self.hi)
                .into_iter()
                .map(|t| ((t - self.lo) / (self.hi - self.lo), fmt_tick(t)))
                .collect()
        }
    }
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn with_marker(mut self, x: f64, label: impl Into<String>) -> Self {
        self.markers.push(Marker { x, label: label.into() });
        self
    }

    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let xa = Axis::fit(pts().map(|p| p.0).chain(self.markers.iter().map(|m| m.x)), self.log_x);
        let ya = Axis::fit(pts().map(|p| p.1), self.log_y);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let px = |f: f64| LEFT + f * pw;
        let py = |f: f64| TOP + (1.0 - f) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for (f, label) in xa.ticks() {
            let x = px(f);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, escape(&label));
        }
        for (f, label) in ya.ticks() {
            let y = py(f);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, escape(&label));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 14.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &series.points {
                match (xa.frac(x), ya.frac(y)) {
                    (Some(fx), Some(fy)) => {
                        let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(fx), py(fy));
                        pen_down = true;
                    }
                    _ => pen_down = false,
                }
            }
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#, path.trim_end());
            let ly = TOP + 14.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 10.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
        }
        for m in &self.markers {
            if let Some(f) = xa.frac(m.x) {
                let x = px(f);
                let _ = writeln!(
                    s,
                    r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#444" stroke-dasharray="5,4"/>"##,
                    TOP + ph
                );
                let _ = writeln!(s, r#"<text x="{:.2}" y="{}" font-size="11">{}</text>"#, x + 4.0, TOP + 14.0, escape(&m.label));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Cells colored by `log10` of their value; rows and columns carry labels.
#[derive(Debug, Clone)]
pub struct HeatMap {
    pub title: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `values[row][col]`; non-positive or non-finite cells are drawn grey.
    pub values: Vec<Vec<f64>>,
}

fn ramp(f: f64) -> String {
    // dark blue (small) to yellow (large)
    let f = f.clamp(0.0, 1.0);
    let stops = [(0.0, [20.0, 30.0, 110.0]), (0.5, [40.0, 160.0, 140.0]), (1.0, [250.0, 220.0, 40.0])];
    let (a, b) = if f <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let t = (f - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + t * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

impl HeatMap {
    pub fn render(&self) -> String {
        let logs: Vec<f64> = self.values.iter().flatten().filter(|v| **v > 0.0 && v.is_finite()).map(|v| v.log10()).collect();
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo.floor(), hi.ceil().max(lo.floor() + 1.0)) } else { (0.0, 1.0) };
        let cell_w = 110.0;
        let cell_h = 22.0;
        let left = 130.0;
        let top = 60.0;
        let width = left + cell_w * self.col_labels.len() as f64 + 140.0;
        let height = top + cell_h * self.row_labels.len() as f64 + 30.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(&self.title));
        for (j, c) in self.col_labels.iter().enumerate() {
            let x = left + cell_w * (j as f64 + 0.5);
            let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, top - 8.0, escape(c));
        }
        for (i, r) in self.row_labels.iter().enumerate() {
            let y = top + cell_h * i as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 8.0, y + 15.0, escape(r));
            for j in 0..self.col_labels.len() {
                let v = self.values.get(i).and_then(|row| row.get(j)).copied().unwrap_or(f64::NAN);
                let (fill, text) = if v > 0.0 && v.is_finite() {
                    (ramp((v.log10() - lo) / (hi - lo)), format!("{v:.1e}"))
                } else {
                    ("#bbbbbb".to_string(), "-".to_string())
                };
                let x = left + cell_w * j as f64;
                let _ = writeln!(s, r#"<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{fill}" stroke="white"/>"#);
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle" fill="white" font-size="11">{text}</text>"#,
                    x + cell_w / 2.0,
                    y + 15.0
                );
            }
        }
        let lx = left + cell_w * self.col_labels.len() as f64 + 30.0;
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let y = top + 10.0 + 24.0 * (4 - k) as f64;
            let _ = writeln!(s, r#"<rect x="{lx}" y="{y}" width="18" height="18" fill="{}"/>"#, ramp(f));
            let _ = writeln!(s, r#"<text x="{}" y="{}">1e{:.1}</text>"#, lx + 24.0, y + 13.0, lo + f * (hi - lo));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_plot_skips_nonpositive_values() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 0.1, 0.0, 0.001];
        let svg = LinePlot::new("decay", "t", "delta").log_y().with_series(Series::new("delta", &x, &y)).with_marker(2.5, "t*").render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        // the zero sample breaks the polyline into two pieces
        let path = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        assert_eq!(path.matches('M').count(), 2);
        assert!(svg.contains("1e-3") && svg.contains("t*"));
    }

    #[test]
    fn linear_ticks_are_round() {
        let t = linear_ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(i, v)| (v - 0.2 * i as f64).abs() < 1e-12));
        let t = linear_ticks(-3.0, 17.0);
        assert!(t.contains(&0.0) && t.contains(&15.0));
    }

    #[test]
    fn heat_map_marks_missing_cells() {
        let h = HeatMap {
            title: "defects".into(),
            row_labels: vec!["(1,1,1)".into(), "(1,1,3)".into()],
            col_labels: vec!["dV".into(), "dI".into()],
            values: vec![vec![1e-9, 1e-6], vec![1e-3, f64::NAN]],
        };
        let svg = h.render();
        assert!(svg.contains("#bbbbbb") && svg.contains("1.0e-9"));
        assert_eq!(svg.matches("<rect x=").count(), 4 + 5);
    }
}
