//! Report emitters: pretty JSON (source of truth), fixed-column CSV, and a
//! dependency-free SVG line/scatter plotter.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::ExperimentError;

/// Which report files an experiment writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            json: true,
            csv: true,
            svg: false,
        }
    }
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut formats = Formats {
            json: false,
            csv: false,
            svg: false,
        };
        for part in s.split(',') {
            match part.trim() {
                "json" => formats.json = true,
                "csv" => formats.csv = true,
                "svg" => formats.svg = true,
                "" => {}
                other => return Err(format!("unknown format {other:?}")),
            }
        }
        Ok(formats)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn csv_opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(T::to_string).unwrap_or_default()
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn around(points: &[(f64, f64)]) -> Frame {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for &(x, y) in points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !x_min.is_finite() {
            x_min = 0.0;
            x_max = 1.0;
            y_min = 0.0;
            y_max = 1.0;
        }
        if x_max - x_min < 1e-12 {
            x_min -= 0.5;
            x_max += 0.5;
        }
        if y_max - y_min < 1e-12 {
            y_min -= 0.5;
            y_max += 0.5;
        }
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min)
            * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min)
                * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn chart_open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"24\" font-family=\"monospace\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    );
}

fn chart_axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = write!(
        out,
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"black\"/>\n"
    );
    let _ = write!(
        out,
        "<text x=\"{x0:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"{x1:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
        y0 + 18.0,
        fmt_tick(frame.x_min),
        y0 + 18.0,
        fmt_tick(frame.x_max),
    );
    let _ = write!(
        out,
        "<text x=\"{:.2}\" y=\"{y0:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>\n\
         <text x=\"{:.2}\" y=\"{y1:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        x0 - 6.0,
        fmt_tick(frame.y_min),
        x0 - 6.0,
        fmt_tick(frame.y_max),
    );
    let _ = write!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{y_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
    );
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

/// A single-series line chart with point markers.
pub(crate) fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
) -> String {
    let frame = Frame::around(points);
    let mut out = String::new();
    chart_open(&mut out, title);
    chart_axes(&mut out, &frame, x_label, y_label);
    if points.len() >= 2 {
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = write!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        );
    }
    for &(x, y) in points {
        let _ = write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n",
            frame.px(x),
            frame.py(y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A two-class scatter (filled vs hollow markers).
pub(crate) fn scatter_two_class(
    title: &str,
    x_label: &str,
    y_label: &str,
    class_a: (&str, &[(f64, f64)]),
    class_b: (&str, &[(f64, f64)]),
) -> String {
    let mut all: Vec<(f64, f64)> = class_a.1.to_vec();
    all.extend_from_slice(class_b.1);
    let frame = Frame::around(&all);
    let mut out = String::new();
    chart_open(&mut out, title);
    chart_axes(&mut out, &frame, x_label, y_label);
    for &(x, y) in class_a.1 {
        let _ = write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#2ca02c\"/>\n",
            frame.px(x),
            frame.py(y)
        );
    }
    for &(x, y) in class_b.1 {
        let _ = write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"none\" stroke=\"#d62728\"/>\n",
            frame.px(x),
            frame.py(y)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" fill=\"#2ca02c\">{} (filled)</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" fill=\"#d62728\">{} (hollow)</text>\n",
        WIDTH - 220.0,
        MARGIN_TOP + 14.0,
        class_a.0,
        WIDTH - 220.0,
        MARGIN_TOP + 30.0,
        class_b.0,
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        let f: Formats = "json,csv,svg".parse().unwrap();
        assert!(f.json && f.csv && f.svg);
        let f: Formats = "json".parse().unwrap();
        assert!(f.json && !f.csv && !f.svg);
        assert!("jsonn".parse::<Formats>().is_err());
    }

    #[test]
    fn charts_are_well_formed() {
        let svg = line_chart("t", "x", "y", &[(1.0, 2.0), (2.0, 1.0)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        let svg = scatter_two_class("t", "x", "y", ("in", &[(0.0, 0.0)]), ("out", &[]));
        assert!(svg.contains("circle"));
    }
}
