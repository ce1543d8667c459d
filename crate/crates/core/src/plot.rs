//! Minimal SVG line charts of actual against predicted series.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(values: &[f64], lo: f64, hi: f64, colour: &str) -> String {
    let n = values.len().max(2) - 1;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut points = String::new();
    for (i, v) in values.iter().enumerate() {
        let x = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / n as f64;
        let y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / span;
        let _ = write!(points, "{x:.2},{y:.2} ");
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
        points.trim_end()
    )
}

/// Renders both series over the test index.
pub fn render_actual_vs_predicted(title: &str, actual: &[f64], predicted: &[f64]) -> Result<String> {
    if actual.len() != predicted.len() || actual.is_empty() {
        return Err(Error::Dimension(format!(
            "cannot plot {} actual against {} predicted values",
            actual.len(),
            predicted.len()
        )));
    }
    let (lo, hi) = actual
        .iter()
        .chain(predicted)
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, "<text x=\"{MARGIN}\" y=\"{}\">{}</text>", MARGIN - 16.0, escape(title));
    let _ = writeln!(svg, "<text x=\"4\" y=\"{}\">{hi:.4}</text>", MARGIN + 4.0);
    let _ = writeln!(svg, "<text x=\"4\" y=\"{}\">{lo:.4}</text>", HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\">test index (0 to {})</text>",
        WIDTH / 2.0 - 60.0,
        HEIGHT - 16.0,
        actual.len() - 1
    );
    svg.push_str(&polyline(actual, lo, hi, "#1f4e9c"));
    svg.push_str(&polyline(predicted, lo, hi, "#d1495b"));
    let legend_x = WIDTH - MARGIN - 150.0;
    let _ = writeln!(
        svg,
        "<text x=\"{legend_x}\" y=\"{}\" fill=\"#1f4e9c\">actual</text><text x=\"{}\" y=\"{}\" fill=\"#d1495b\">predicted</text>",
        MARGIN - 16.0,
        legend_x + 60.0,
        MARGIN - 16.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn write_actual_vs_predicted(path: &Path, title: &str, actual: &[f64], predicted: &[f64]) -> Result<()> {
    let svg = render_actual_vs_predicted(title, actual, predicted)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_two_lines() {
        let svg = render_actual_vs_predicted("torque <fnn>", &[1.0, 2.0, 3.0], &[1.5, 2.0, 2.5]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("torque &lt;fnn&gt;"));
        assert!(render_actual_vs_predicted("x", &[1.0], &[]).is_err());
    }
}
