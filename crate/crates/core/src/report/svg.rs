use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{fmt_f64, ScoreGrid};
use crate::eval::GenerationReport;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(out: &mut String, kind: &str, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" data-kind="{kind}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

/// Maps `[lo, hi]` onto `[a, b]`; a degenerate range maps to the midpoint.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// One bar per report fraction; undefined fractions get a zero-height bar
/// with an empty `data-value`.
pub fn metric_panel_svg(report: &GenerationReport) -> String {
    let metrics = [
        ("validity", report.validity),
        ("uniqueness", report.uniqueness),
        ("novelty", report.novelty),
        ("mean_qed_lite", report.mean_qed_lite),
        ("lipinski_rate", report.lipinski_rate),
    ];
    let mut out = String::new();
    open(&mut out, "metrics", W, H);
    let slot = (W - 2.0 * MARGIN) / metrics.len() as f64;
    let base = H - MARGIN;
    let _ = writeln!(out, r##"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="#333"/>"##, W - MARGIN);
    for (i, (name, value)) in metrics.iter().enumerate() {
        let x = MARGIN + i as f64 * slot + slot * 0.15;
        let h = value.unwrap_or(0.0) * (H - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4c72b0" data-metric="{name}" data-value="{}"/>"##,
            base - h,
            slot * 0.7,
            value.map_or(String::new(), fmt_f64)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{name}</text>"#,
            x + slot * 0.35,
            base + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="20" font-size="11">n = {}; qed_lite is a six-property variant</text>"#,
        report.total
    );
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub epoch: u64,
    pub total: f64,
}

/// Polyline of total loss against epoch with one `circle.point` per epoch.
pub fn loss_curve_svg(points: &[LossPoint]) -> String {
    let mut out = String::new();
    open(&mut out, "loss-curve", W, H);
    let (e_lo, e_hi) = bounds(points.iter().map(|p| p.epoch as f64));
    let (l_lo, l_hi) = bounds(points.iter().map(|p| p.total));
    let xy = |p: &LossPoint| {
        (
            scale(p.epoch as f64, e_lo, e_hi, MARGIN, W - MARGIN),
            scale(p.total, l_lo, l_hi, H - MARGIN, MARGIN),
        )
    };
    let coords: Vec<String> = points
        .iter()
        .map(|p| {
            let (x, y) = xy(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r##"<polyline fill="none" stroke="#c44e52" stroke-width="1.5" points="{}"/>"##, coords.join(" "));
    for p in points {
        let (x, y) = xy(p);
        let _ = writeln!(
            out,
            r##"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#c44e52" data-epoch="{}" data-total="{}"/>"##,
            p.epoch,
            fmt_f64(p.total)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">epoch</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(out, r#"<text x="14" y="{}" font-size="11" transform="rotate(-90 14 {})">total loss</text>"#, H / 2.0, H / 2.0);
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Series {
    Training,
    Generated,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::Training => "training",
            Series::Generated => "generated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub id: String,
    pub series: Series,
    pub x: f64,
    pub y: f64,
}

/// Training points are blue circles, generated points orange squares; every
/// marker has class `point`.
pub fn projection_svg(points: &[ProjectedPoint]) -> String {
    let mut out = String::new();
    open(&mut out, "projection", W, H);
    let (x_lo, x_hi) = bounds(points.iter().map(|p| p.x));
    let (y_lo, y_hi) = bounds(points.iter().map(|p| p.y));
    for p in points {
        let cx = scale(p.x, x_lo, x_hi, MARGIN, W - MARGIN);
        let cy = scale(p.y, y_lo, y_hi, H - MARGIN, MARGIN);
        let data = format!(
            r#"data-id="{}" data-series="{}" data-x="{}" data-y="{}""#,
            esc(&p.id),
            p.series.as_str(),
            fmt_f64(p.x),
            fmt_f64(p.y)
        );
        match p.series {
            Series::Training => {
                let _ = writeln!(out, r##"<circle class="point" cx="{cx:.2}" cy="{cy:.2}" r="3" fill="#1f77b4" {data}/>"##);
            }
            Series::Generated => {
                let _ = writeln!(
                    out,
                    r##"<rect class="point" x="{:.2}" y="{:.2}" width="6" height="6" fill="#ff7f0e" {data}/>"##,
                    cx - 3.0,
                    cy - 3.0
                );
            }
        }
    }
    let _ = writeln!(out, r##"<circle cx="{}" cy="20" r="3" fill="#1f77b4"/><text x="{}" y="24" font-size="11">training</text>"##, W - 150.0, W - 142.0);
    let _ = writeln!(out, r##"<rect x="{}" y="32" width="6" height="6" fill="#ff7f0e"/><text x="{}" y="40" font-size="11">generated</text>"##, W - 153.0, W - 142.0);
    out.push_str("</svg>\n");
    out
}

/// Blue for the strongest (most negative) score, through white, to red.
fn diverging(t: f64) -> String {
    let lerp = |a: f64, b: f64, u: f64| (a + (b - a) * u).round() as u8;
    let (r, g, b) = if t < 0.5 {
        let u = t * 2.0;
        (lerp(33.0, 247.0, u), lerp(102.0, 247.0, u), lerp(172.0, 247.0, u))
    } else {
        let u = (t - 0.5) * 2.0;
        (lerp(247.0, 178.0, u), lerp(247.0, 24.0, u), lerp(247.0, 43.0, u))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Rows follow the grid's compound order, columns its ligase order. A
/// single-valued grid colours every cell with the scale midpoint.
pub fn heatmap_svg(grid: &ScoreGrid) -> String {
    let cell = 28.0;
    let left = 120.0;
    let top = 60.0;
    let width = left + cell * grid.ligases.len() as f64 + 40.0;
    let height = top + cell * grid.compounds.len() as f64 + 60.0;
    let (lo, hi) = grid.range().unwrap_or((0.0, 0.0));
    let mut out = String::new();
    open(&mut out, "heatmap", width, height);
    for (j, ligase) in grid.ligases.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            left + cell * (j as f64 + 0.5),
            top - 8.0,
            esc(ligase)
        );
    }
    for (i, compound) in grid.compounds.iter().enumerate() {
        let y = top + cell * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + cell * 0.65,
            esc(compound)
        );
        for (j, ligase) in grid.ligases.iter().enumerate() {
            let x = left + cell * j as f64;
            let (fill, value) = match grid.cells[i][j] {
                Some(v) => (diverging(scale(v, lo, hi, 0.0, 1.0)), fmt_f64(v)),
                None => ("#dddddd".to_string(), String::new()),
            };
            let _ = writeln!(
                out,
                r##"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cell}" height="{cell}" fill="{fill}" stroke="#ffffff" data-row="{i}" data-col="{j}" data-compound="{}" data-ligase="{}" data-score="{value}"/>"##,
                esc(compound),
                esc(ligase)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text class="scale" x="{left}" y="{:.2}" font-size="11" data-min="{}" data-max="{}">min {} / max {} kcal/mol</text>"#,
        height - 24.0,
        fmt_f64(lo),
        fmt_f64(hi),
        fmt_f64(lo),
        fmt_f64(hi)
    );
    out.push_str("</svg>\n");
    out
}
