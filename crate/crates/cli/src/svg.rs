//! Minimal line and scatter plots as SVG text.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
}

#[derive(Debug, Clone)]
struct Layer {
    name: String,
    pts: Vec<(f64, f64)>,
    yerr: Option<Vec<f64>>,
    style: Style,
}

#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    xlabel: String,
    ylabel: String,
    layers: Vec<Layer>,
    equal_aspect: bool,
}

impl Plot {
    pub fn new(title: &str, xlabel: &str, ylabel: &str) -> Self {
        Self { title: title.into(), xlabel: xlabel.into(), ylabel: ylabel.into(), layers: Vec::new(), equal_aspect: false }
    }

    /// Same scale on both axes, for curves in the plane.
    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    pub fn line(&mut self, name: &str, pts: Vec<(f64, f64)>) -> &mut Self {
        self.layers.push(Layer { name: name.into(), pts, yerr: None, style: Style::Line });
        self
    }

    pub fn points(&mut self, name: &str, pts: Vec<(f64, f64)>, yerr: Option<Vec<f64>>) -> &mut Self {
        self.layers.push(Layer { name: name.into(), pts, yerr, style: Style::Points });
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for l in &self.layers {
            for (k, &(x, y)) in l.pts.iter().enumerate() {
                if !(x.is_finite() && y.is_finite()) {
                    continue;
                }
                let e = l.yerr.as_ref().map_or(0.0, |e| e[k]);
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y - e);
                y1 = y1.max(y + e);
            }
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        if self.equal_aspect {
            let sx = (x1 - x0) / (W - 2.0 * MARGIN);
            let sy = (y1 - y0) / (H - 2.0 * MARGIN);
            let s = sx.max(sy);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            let (hw, hh) = (0.5 * s * (W - 2.0 * MARGIN), 0.5 * s * (H - 2.0 * MARGIN));
            return (cx - hw, cx + hw, cy - hh, cy + hh);
        }
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
        let _ = writeln!(s, r#"<text x="{l}" y="{}">{}</text>"#, b + 16.0, tick(x0));
        let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="end">{}</text>"#, b + 16.0, tick(x1));
        let _ = writeln!(s, r#"<text x="{}" y="{b}" text-anchor="end">{}</text>"#, l - 4.0, tick(y0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, t + 10.0, tick(y1));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(&self.xlabel));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.ylabel)
        );
        for (k, layer) in self.layers.iter().enumerate() {
            let c = COLOURS[k % COLOURS.len()];
            let finite = layer.pts.iter().enumerate().filter(|(_, (x, y))| x.is_finite() && y.is_finite());
            match layer.style {
                Style::Line => {
                    let d: Vec<String> = finite.map(|(_, &(x, y))| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                    if !d.is_empty() {
                        let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{}"/>"#, d.join(" "));
                    }
                }
                Style::Points => {
                    for (i, &(x, y)) in finite {
                        if let Some(e) = &layer.yerr {
                            let _ = writeln!(
                                s,
                                r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1:.2}" y2="{2:.2}" stroke="{c}"/>"#,
                                sx(x),
                                sy(y - e[i]),
                                sy(y + e[i])
                            );
                        }
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, sx(x), sy(y));
                    }
                }
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{c}">{}</text>"#,
                r - 150.0,
                t + 16.0 + 14.0 * k as f64,
                escape(&layer.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_layers_deterministically() {
        let mut p = Plot::new("a < b", "t", "W");
        p.line("fit", vec![(0.0, 0.0), (1.0, 4.0)]);
        p.points("data", vec![(0.5, 2.1), (1.0, f64::NAN)], Some(vec![0.1, 0.1]));
        let a = p.render();
        assert_eq!(a, p.render());
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 1);
        assert_eq!(a.matches("<circle").count(), 1);
        assert!(a.contains("a &lt; b"));
    }

    #[test]
    fn empty_and_flat_plots_do_not_divide_by_zero() {
        let p = Plot::new("empty", "x", "y");
        assert!(!p.render().contains("NaN"));
        let mut p = Plot::new("flat", "x", "y").equal_aspect();
        p.line("c", vec![(1.0, 1.0), (1.0, 1.0)]);
        assert!(!p.render().contains("NaN"));
    }
}
