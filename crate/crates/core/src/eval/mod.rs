//! Scoring generated molecule sets and 2-D projections of fingerprints.

mod metrics;
mod projection;
mod qed;

use thiserror::Error;

pub use metrics::{
    evaluate_samples, lipinski_violations, novelty, uniqueness, validity, GenerationReport, SampleDetail,
};
pub use projection::{pca_2d, project_2d, tsne_2d, ProjectionConfig, ProjectionMethod};
pub use qed::{qed_lite, QedLite, QED_PROPERTIES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} must be below (n - 1) / 3 = {limit}")]
    Perplexity { perplexity: f64, limit: f64 },
    #[error("points have differing dimensions")]
    Ragged,
    #[error("qed-lite parameters: {0}")]
    Parameters(String),
}
