//! Plain-text SVG and CSV emitters whose plotted elements carry `data-*`
//! attributes, so tests can compare values instead of pixels.

mod scores;
mod svg;

use thiserror::Error;

pub use scores::{mean_table, read_scores, write_means_csv, MeanRow, ScoreGrid, ScoreRow, ALL_DESIGNS};
pub use svg::{heatmap_svg, loss_curve_svg, metric_panel_svg, projection_svg, LossPoint, ProjectedPoint, Series};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("line {line}: {msg}")]
    Format { line: u64, msg: String },
    #[error("line {line}: unknown ligase `{ligase}`")]
    UnknownLigase { line: u64, ligase: String },
    #[error("line {line}: score is not finite")]
    NonFinite { line: u64 },
    #[error("no score rows")]
    Empty,
}

/// Shortest decimal that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}
