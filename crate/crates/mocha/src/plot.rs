//! SVG rendering: decode-time scaling curves and attention alignment
//! heatmaps. Plain vector output with no timestamps, so identical inputs
//! produce byte-identical files.

use crate::bench::BenchRecord;
use crate::error::{Error, Result};
use crate::transducer::{AlignmentTrace, Mechanism};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const PALETTE: [&str; 8] =
    ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085", "#7f8c8d", "#2c3e50"];

/// Scaling curves: one polyline per (mechanism, w) series, x = T,
/// y = mean seconds.
pub fn scaling_svg(records: &[BenchRecord]) -> String {
    assert!(!records.is_empty(), "no records to plot");
    // group into series keyed by (mechanism, w), insertion-ordered by key
    let mut series: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        series
            .entry((r.mechanism.clone(), r.w))
            .or_default()
            .push((r.t as f64, r.mean_seconds));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite lengths"));
    }

    let (width, height) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 180.0, 30.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let x_max = records.iter().map(|r| r.t as f64).fold(f64::MIN, f64::max);
    let x_min = records.iter().map(|r| r.t as f64).fold(f64::MAX, f64::min);
    let y_max = records.iter().map(|r| r.mean_seconds).fold(f64::MIN, f64::max);
    let x_span = (x_max - x_min).max(1e-12);
    let y_span = y_max.max(1e-12);
    let sx = |x: f64| left + (x - x_min) / x_span * plot_w;
    let sy = |y: f64| top + plot_h - y / y_span * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        top + plot_h,
        left + plot_w,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>",
        top + plot_h
    );
    // x ticks at each distinct T
    let mut ticks: Vec<f64> = records.iter().map(|r| r.t as f64).collect();
    ticks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    ticks.dedup();
    for &t in &ticks {
        let x = sx(t);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
            top + plot_h,
            top + plot_h + 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"10\" text-anchor=\"middle\">{t}</text>",
            top + plot_h + 16.0
        );
    }
    // y ticks: 0, half, max
    for frac in [0.0, 0.5, 1.0] {
        let yv = y_max * frac;
        let y = sy(yv);
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{left}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            left - 4.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{yv:.2e}</text>",
            left - 7.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">memory length T (= U)</text>",
        left + plot_w / 2.0,
        height - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {:.2})\">mean seconds per decode</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );

    for (idx, ((mechanism, w), pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut points = String::new();
        for (x, y) in pts {
            let _ = write!(points, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.trim_end()
        );
        let label = series_label(mechanism, *w);
        let ly = top + 14.0 * idx as f64 + 10.0;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{:.2}\" x2=\"{}\" y2=\"{:.2}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>",
            ly - 3.0,
            lx + 18.0,
            ly - 3.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{ly:.2}\" font-size=\"10\">{label}</text>",
            lx + 24.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn series_label(mechanism: &str, w: usize) -> String {
    match (mechanism, w) {
        ("mocha", w) => format!("mocha (w={w})"),
        ("monotonic", _) => "monotonic (w=1)".to_string(),
        (other, _) => other.to_string(),
    }
}

pub fn emit_scaling_plot(records: &[BenchRecord], path: &Path) -> Result<()> {
    write_file(path, &scaling_svg(records))
}

/// Alignment heatmap: memory index on the horizontal axis, output step on
/// the vertical axis, cell shade proportional to attention weight (weight 1
/// is black).
pub fn alignment_svg(trace: &AlignmentTrace) -> String {
    assert!(!trace.rows.is_empty(), "empty alignment trace");
    let t = trace.memory_len;
    let steps = trace.rows.len();
    let cell = 14.0;
    let (left, top) = (60.0, 34.0);
    let width = left + t as f64 * cell + 20.0;
    let height = top + steps as f64 * cell + 44.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let title = match trace.mechanism {
        Mechanism::Mocha { width } => format!("mocha (w={width}) alignment"),
        m => format!("{} alignment", m.name()),
    };
    let _ = writeln!(
        svg,
        "<text x=\"{left}\" y=\"18\" font-size=\"12\">{title}</text>"
    );

    for (i, row) in trace.rows.iter().enumerate() {
        assert_eq!(row.len(), t, "trace row {i} has wrong length");
        for (j, &wgt) in row.iter().enumerate() {
            let shade = (255.0 * (1.0 - wgt.clamp(0.0, 1.0))).round() as u8;
            let x = left + j as f64 * cell;
            let y = top + i as f64 * cell;
            let _ = writeln!(
                svg,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"rgb({shade},{shade},{shade})\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>"
            );
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">memory index</text>",
        left + t as f64 * cell / 2.0,
        top + steps as f64 * cell + 28.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" \
         transform=\"rotate(-90 14 {:.1})\">output step</text>",
        top + steps as f64 * cell / 2.0,
        top + steps as f64 * cell / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_alignment_plot(trace: &AlignmentTrace, path: &Path) -> Result<()> {
    write_file(path, &alignment_svg(trace))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
        }
    }
    std::fs::write(path, content).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
