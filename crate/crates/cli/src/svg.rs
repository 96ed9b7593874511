//! Minimal SVG line charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut t = vec![];
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                t.push(10f64.powf(e));
                e += step;
            }
            return t;
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut t = vec![];
        let mut v = (self.lo / step).ceil() * step;
        while v <= self.hi + 1e-9 * step {
            t.push(v);
            v += step;
        }
        t
    }
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.0e}")
    } else {
        format!("{}", (v * 1e6).round() / 1e6)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let usable = |&(x, y): &(f64, f64)| {
            x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0) && (!self.log_y || y > 0.0)
        };
        let pts = || self.series.iter().flat_map(|s| s.points.iter().copied().filter(usable));
        let ax = Axis::fit(pts().map(|p| p.0), self.log_x);
        let ay = Axis::fit(pts().map(|p| p.1), self.log_y);
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let px = |x: f64| LEFT + ax.frac(x) * pw;
        let py = |y: f64| TOP + (1.0 - ay.frac(y)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, esc(&self.title));
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        for t in ax.ticks() {
            let x = px(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, label(t));
        }
        for t in ay.ticks() {
            let y = py(t);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, label(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let c = COLOURS[k % COLOURS.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .filter(|p| usable(p))
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polyline class="series" fill="none" stroke="{c}" stroke-width="1.5"{dash} points="{}"/>"#,
                path.join(" ")
            );
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"{dash}/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&series.name));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(log_y: bool) -> Chart {
        Chart {
            title: "decay <test>".into(),
            x_label: "t".into(),
            y_label: "norm".into(),
            log_x: false,
            log_y,
            series: vec![
                Series::new("a", (0..10).map(|k| (k as f64, (-(k as f64)).exp())).collect()),
                Series::new("b", vec![(0.0, 1.0), (9.0, 0.0)]).dashed(),
            ],
        }
    }

    #[test]
    fn one_polyline_per_series() {
        let s = chart(true).render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches(r#"class="series""#).count(), 2);
        assert!(s.contains("decay &lt;test&gt;"));
    }

    #[test]
    fn log_axis_drops_nonpositive_points() {
        let s = chart(true).render();
        let b = s.lines().filter(|l| l.contains("class=\"series\"")).nth(1).unwrap();
        assert_eq!(b.matches(',').count(), 1);
        let s = chart(false).render();
        let b = s.lines().filter(|l| l.contains("class=\"series\"")).nth(1).unwrap();
        assert_eq!(b.matches(',').count(), 2);
    }

    #[test]
    fn linear_ticks_are_round() {
        let a = Axis { lo: 0.0, hi: 10.0, log: false };
        assert_eq!(a.ticks(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let a = Axis { lo: -3.0, hi: 1.0, log: true };
        assert_eq!(a.ticks().len(), 5);
    }
}
