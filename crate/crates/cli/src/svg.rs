//! Minimal static SVG line charts.

use std::fmt::Write as _;

use crate::table::fmt_num;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Replaces numeric y tick labels (value, text).
    pub y_ticks: Option<Vec<(f64, String)>>,
    /// Draw as a step function.
    pub steps: bool,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

impl Chart {
    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = extent(pts().map(|p| p.0));
        let (mut y0, mut y1) = extent(pts().map(|p| p.1));
        if let Some(t) = &self.y_ticks {
            let (a, b) = extent(t.iter().map(|p| p.0));
            y0 = y0.min(a) - 0.5;
            y1 = y1.max(b) + 0.5;
        }
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut o = String::new();
        let _ = writeln!(o, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(o, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(o, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(
            o,
            r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
            H - BOTTOM,
            W - RIGHT
        );
        for i in 0..=4 {
            let x = x0 + (x1 - x0) * i as f64 / 4.0;
            let _ = writeln!(
                o,
                r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
                sx(x),
                H - BOTTOM + 16.0,
                fmt_num((x * 1e4).round() / 1e4)
            );
        }
        let ticks: Vec<(f64, String)> = match &self.y_ticks {
            Some(t) => t.clone(),
            None => (0..=4)
                .map(|i| {
                    let y = y0 + (y1 - y0) * i as f64 / 4.0;
                    (y, fmt_num((y * 1e4).round() / 1e4))
                })
                .collect(),
        };
        for (y, label) in ticks {
            let _ = writeln!(
                o,
                r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                LEFT - 6.0,
                sy(y) + 4.0,
                escape(&label)
            );
        }
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            (LEFT + W - RIGHT) / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        for (k, s) in self.series.iter().enumerate() {
            let c = COLOURS[k % COLOURS.len()];
            let mut d = String::new();
            let mut prev: Option<(f64, f64)> = None;
            for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                match prev {
                    None => {
                        let _ = write!(d, "M{:.2} {:.2}", sx(x), sy(y));
                    }
                    Some((_, py)) if self.steps => {
                        let _ = write!(d, " L{:.2} {:.2} L{:.2} {:.2}", sx(x), sy(py), sx(x), sy(y));
                    }
                    Some(_) => {
                        let _ = write!(d, " L{:.2} {:.2}", sx(x), sy(y));
                    }
                }
                prev = Some((x, y));
            }
            let _ = writeln!(o, r#"<path d="{d}" fill="none" stroke="{c}" stroke-width="1.5"/>"#);
            if self.series.len() > 1 {
                let ly = TOP + 14.0 * k as f64;
                let _ = writeln!(
                    o,
                    r#"<text x="{}" y="{ly}" text-anchor="end" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
                    W - RIGHT - 4.0,
                    escape(&s.name)
                );
            }
        }
        o.push_str("</svg>\n");
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_paths_and_labels() {
        let c = Chart {
            title: "E vs t".into(),
            x_label: "t".into(),
            y_label: "E".into(),
            series: vec![Series { name: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)] }],
            y_ticks: None,
            steps: false,
        };
        let s = c.render();
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<path").count(), 2);
        assert!(!s.contains("NaN"));
    }
}
