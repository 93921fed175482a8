//! Dependency-free SVG 1.1 line plots.
//!
//! Output is a fixed 800x600 canvas with linear axes, tick labels, one
//! polyline per series and a legend. Rendering is a pure function of the
//! [`PlotSpec`], so identical inputs produce byte-identical documents.

use crate::error::{Error, Result};
use crate::units::format_sig;
use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 46.0;
const MARGIN_B: f64 = 62.0;

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One plotted series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Plot description consumed by [`render_svg`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

impl PlotSpec {
    fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::Validation("plot needs at least one series".into()));
        }
        for s in &self.series {
            if s.points.is_empty() {
                return Err(Error::Validation(format!("series `{}` is empty", s.name)));
            }
            if s.points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                return Err(Error::Validation(format!("series `{}` has non-finite values", s.name)));
            }
        }
        Ok(())
    }
}

/// "Nice" tick spacing covering `span` with about `n` intervals.
fn nice_step(span: f64, n: usize) -> f64 {
    if span <= 0.0 {
        return 1.0;
    }
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the plot to a self-contained SVG 1.1 document.
pub fn render_svg(plot: &PlotSpec) -> Result<String> {
    plot.validate()?;
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &plot.series {
        for &(x, y) in &s.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if x_hi == x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi == y_lo {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let y_pad = 0.05 * (y_hi - y_lo);
    y_lo -= y_pad;
    y_hi += y_pad;

    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="26" font-family="sans-serif" font-size="17" text-anchor="middle">{}</text>"#,
        (WIDTH / 2.0),
        escape(&plot.title)
    );

    // frame
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );

    for t in ticks(x_lo, x_hi) {
        let x = px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#cccccc" stroke-width="0.6"/>"##,
            MARGIN_T,
            HEIGHT - MARGIN_B
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 18.0,
            format_sig(t, 6)
        );
    }
    for t in ticks(y_lo, y_hi) {
        let y = py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#cccccc" stroke-width="0.6"/>"##,
            MARGIN_L,
            WIDTH - MARGIN_R
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            MARGIN_L - 8.0,
            y + 4.0,
            format_sig(t, 6)
        );
    }

    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 16.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        escape(&plot.y_label)
    );

    for (i, s) in plot.series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut path = String::new();
        for &(x, y) in &s.points {
            if !path.is_empty() {
                path.push(' ');
            }
            let _ = write!(path, "{:.2},{:.2}", px(x), py(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"/>"#
        );
        // legend row
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly:.2}" x2="{}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            WIDTH - MARGIN_R - 150.0,
            WIDTH - MARGIN_R - 120.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            WIDTH - MARGIN_R - 112.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_series_has_one_polyline_with_two_coordinates() {
        let plot = PlotSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                name: "s".into(),
                points: vec![(0.0, 1.0), (2.0, 3.0)],
            }],
        };
        let svg = render_svg(&plot).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let points_attr = svg
            .split("polyline points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(points_attr.split(' ').count(), 2);
    }

    #[test]
    fn deterministic_bytes() {
        let plot = PlotSpec {
            title: "determinism".into(),
            x_label: "gap (mm)".into(),
            y_label: "force (N)".into(),
            series: vec![Series {
                name: "model".into(),
                points: (0..40).map(|i| (i as f64, (0.1 * i as f64).sin())).collect(),
            }],
        };
        assert_eq!(render_svg(&plot).unwrap(), render_svg(&plot).unwrap());
    }

    #[test]
    fn empty_series_rejected() {
        let plot = PlotSpec {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            series: vec![],
        };
        assert!(render_svg(&plot).is_err());
        let plot2 = PlotSpec {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            series: vec![Series {
                name: "e".into(),
                points: vec![],
            }],
        };
        assert!(render_svg(&plot2).is_err());
    }

    #[test]
    fn escapes_markup_in_labels() {
        let plot = PlotSpec {
            title: "a < b & c".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                name: "s".into(),
                points: vec![(0.0, 0.0), (1.0, 1.0)],
            }],
        };
        let svg = render_svg(&plot).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
