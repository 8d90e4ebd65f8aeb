use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::study::ConvergenceReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "scheme,h,error,norm,problem,grid,T";

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// 17 significant digits, which round-trips every `f64`.
fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(report: &ConvergenceReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let norm = report.norm_label();
    for s in &report.schemes {
        for m in &s.measurements {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.scheme,
                full_precision(m.h),
                full_precision(m.error),
                norm,
                report.problem,
                report.grid,
                full_precision(report.final_time)
            );
        }
    }
    out
}

pub fn emit_csv(report: &ConvergenceReport, path: &Path) -> Result<()> {
    write_atomic(path, csv_string(report).as_bytes())
}

pub fn emit_json(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];
const GUIDE_DASHES: [&str; 3] = ["6,4", "8,3,2,3", "2,3"];

/// Maps `(log10 h, log10 e)` to pixel coordinates.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, lx: f64) -> f64 {
        MARGIN_LEFT + (lx - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, ly: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (ly - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn marker(shape: usize, x: f64, y: f64, color: &str) -> String {
    match shape % 3 {
        0 => format!(r#"<circle cx="{x:.6}" cy="{y:.6}" r="4" fill="{color}"/>"#),
        1 => format!(
            r#"<rect x="{:.6}" y="{:.6}" width="8" height="8" fill="{color}"/>"#,
            x - 4.0,
            y - 4.0
        ),
        _ => format!(
            r#"<polygon points="{:.6},{:.6} {:.6},{:.6} {:.6},{:.6}" fill="{color}"/>"#,
            x,
            y - 5.0,
            x - 5.0,
            y + 4.0,
            x + 5.0,
            y + 4.0
        ),
    }
}

/// Standalone SVG log-log plot of error against step size with dashed guide
/// lines of the given slopes anchored at the rightmost data point.
pub fn svg_string(report: &ConvergenceReport, guides: &[f64]) -> Result<String> {
    let points: Vec<(f64, f64)> = report
        .schemes
        .iter()
        .flat_map(|s| s.measurements.iter())
        .filter(|m| m.h > 0.0 && m.error > 0.0)
        .map(|m| (m.h.log10(), m.error.log10()))
        .collect();
    if report.schemes.is_empty() || points.is_empty() {
        return Err(Error::EmptyReport);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let anchor = points
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .expect("nonempty");
    let guide_lines: Vec<[(f64, f64); 2]> = guides
        .iter()
        .map(|&p| [(x0, anchor.1 + p * (x0 - anchor.0)), anchor])
        .collect();
    for line in &guide_lines {
        y0 = y0.min(line[0].1);
        y1 = y1.max(line[0].1);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let frame = Frame {
        x0,
        x1,
        y0: y0 - pad,
        y1: y1 + pad,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for d in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let lx = d as f64;
        if lx < frame.x0 - 1e-9 || lx > frame.x1 + 1e-9 {
            continue;
        }
        let x = frame.px(lx);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{x:.6}" y1="{bottom}" x2="{x:.6}" y2="{}" stroke="black"/><text x="{x:.6}" y="{}" text-anchor="middle">1e{d}</text>"#,
            bottom + 5.0,
            bottom + 18.0
        );
    }
    for d in (frame.y0.floor() as i32)..=(frame.y1.ceil() as i32) {
        let ly = d as f64;
        if ly < frame.y0 || ly > frame.y1 {
            continue;
        }
        let y = frame.py(ly);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{}" y1="{y:.6}" x2="{left}" y2="{y:.6}" stroke="black"/><text x="{}" y="{:.6}" text-anchor="end">1e{d}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{:.1}" y="{:.1}" text-anchor="middle">step size h</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" transform="translate(20,{:.1}) rotate(-90)" text-anchor="middle">error, {}</text>"#,
        (top + bottom) / 2.0,
        report.norm.display_name()
    );
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{:.1}" y="18" text-anchor="middle">{} on {} grid, T = {}</text>"#,
        (left + right) / 2.0,
        report.problem,
        report.grid,
        report.final_time
    );

    for (i, (line, slope)) in guide_lines.iter().zip(guides).enumerate() {
        let _ = writeln!(
            svg,
            r#"<polyline class="guide" data-slope="{slope}" points="{:.6},{:.6} {:.6},{:.6}" fill="none" stroke="gray" stroke-dasharray="{}"/>"#,
            frame.px(line[0].0),
            frame.py(line[0].1),
            frame.px(line[1].0),
            frame.py(line[1].1),
            GUIDE_DASHES[i % GUIDE_DASHES.len()]
        );
    }
    for (i, s) in report.schemes.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = s
            .measurements
            .iter()
            .filter(|m| m.h > 0.0 && m.error > 0.0)
            .map(|m| (frame.px(m.h.log10()), frame.py(m.error.log10())))
            .collect();
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.6},{y:.6}")).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="data" data-scheme="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            s.scheme,
            coords.join(" ")
        );
        for &(x, y) in &pts {
            svg.push_str(&marker(i, x, y, color));
            svg.push('\n');
        }
        let ly = top + 20.0 + 20.0 * i as f64;
        svg.push_str(&marker(i, right + 20.0, ly, color));
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}">{}</text>"#, right + 32.0, ly + 4.0, s.scheme);
    }
    for (i, slope) in guides.iter().enumerate() {
        let ly = top + 20.0 + 20.0 * (report.schemes.len() + i) as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly:.1}" x2="{}" y2="{ly:.1}" stroke="gray" stroke-dasharray="{}"/><text x="{}" y="{:.1}">slope {slope}</text>"#,
            right + 10.0,
            right + 28.0,
            GUIDE_DASHES[i % GUIDE_DASHES.len()],
            right + 32.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg_loglog(report: &ConvergenceReport, guides: &[f64], path: &Path) -> Result<()> {
    write_atomic(path, svg_string(report, guides)?.as_bytes())
}

/// Writes `report.csv`, `report.json` and, if requested, `plot.svg` into
/// `dir`, creating it if needed. Returns the written paths.
pub fn write_outputs(report: &ConvergenceReport, dir: &Path, plot: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("report.csv"), dir.join("report.json")];
    emit_csv(report, &written[0])?;
    emit_json(report, &written[1])?;
    if plot {
        let svg = dir.join("plot.svg");
        emit_svg_loglog(report, &report.guides, &svg)?;
        written.push(svg);
    }
    Ok(written)
}
