//! Deterministic scatter-plot output: SVG 1.1 plus a CSV of the coordinates.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::Projection2D;

/// Categorical fill colors, cycled by legend position.
const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 40.0;

/// Write a self-contained SVG scatter plot: one circle per projected point,
/// one color and legend entry per distinct label, axes spanning the data
/// bounds with a 5% margin. Byte-deterministic for identical inputs.
pub fn emit_scatter(proj: &Projection2D, labels: &[String], path: &Path) -> Result<()> {
    let n = proj.coords.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyDataset("no points to plot".into()));
    }
    let legend: Vec<String> = labels
        .iter()
        .cloned()
        .collect::<BTreeSet<String>>()
        .into_iter()
        .collect();
    let color_of = |label: &String| -> &str {
        let idx = legend.iter().position(|l| l == label).unwrap_or(0);
        PALETTE[idx % PALETTE.len()]
    };

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in 0..n {
        x_min = x_min.min(proj.coords.get(r, 0));
        x_max = x_max.max(proj.coords.get(r, 0));
        y_min = y_min.min(proj.coords.get(r, 1));
        y_max = y_max.max(proj.coords.get(r, 1));
    }
    // 5% margin around the data bounds; degenerate spans widen to a unit box.
    let pad = |min: &mut f64, max: &mut f64| {
        let span = *max - *min;
        if span <= 0.0 {
            *min -= 0.5;
            *max += 0.5;
        } else {
            *min -= 0.05 * span;
            *max += 0.05 * span;
        }
    };
    pad(&mut x_min, &mut x_max);
    pad(&mut y_min, &mut y_max);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!(
        "  <!-- {} -->\n",
        xml_escape(&proj.config_summary)
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));
    // Axes along the left and bottom of the plot area with bound labels.
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + plot_w;
    let y0 = MARGIN_TOP;
    let y1 = MARGIN_TOP + plot_h;
    out.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y1:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    out.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    let text = |x: f64, y: f64, anchor: &str, body: String| {
        format!(
            "  <text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\" text-anchor=\"{anchor}\">{body}</text>\n"
        )
    };
    out.push_str(&text(x0, y1 + 16.0, "start", format!("{x_min:.3}")));
    out.push_str(&text(x1, y1 + 16.0, "end", format!("{x_max:.3}")));
    out.push_str(&text(x0 - 6.0, y1, "end", format!("{y_min:.3}")));
    out.push_str(&text(x0 - 6.0, y0 + 10.0, "end", format!("{y_max:.3}")));

    for r in 0..n {
        out.push_str(&format!(
            "  <circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.75\"/>\n",
            sx(proj.coords.get(r, 0)),
            sy(proj.coords.get(r, 1)),
            color_of(&labels[r]),
        ));
    }

    for (idx, entry) in legend.iter().enumerate() {
        let ly = MARGIN_TOP + 14.0 + idx as f64 * 18.0;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        out.push_str(&format!(
            "  <rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
            ly - 9.0,
            PALETTE[idx % PALETTE.len()],
        ));
        out.push_str(&text(lx + 16.0, ly, "start", xml_escape(entry)));
    }
    out.push_str("</svg>\n");
    fs::write(path, out)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// CSV companion to the scatter plot: `index,x,y,label,source` rows with
/// `# key = value` metadata lines.
pub fn write_projection_csv(
    path: &Path,
    proj: &Projection2D,
    labels: &[String],
    source: &str,
    meta: &[(String, String)],
) -> Result<()> {
    let n = proj.coords.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    let mut out = String::new();
    for (key, value) in meta {
        out.push_str(&format!("# {key} = {value}\n"));
    }
    out.push_str("index,x,y,label,source\n");
    for r in 0..n {
        out.push_str(&format!(
            "{r},{},{},{},{source}\n",
            proj.coords.get(r, 0),
            proj.coords.get(r, 1),
            labels[r],
        ));
    }
    fs::write(path, out)?;
    Ok(())
}
