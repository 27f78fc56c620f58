//! Clique decomposition into junction trees and the clique-label vocabulary.

mod cover;
mod decompose;
mod vocab;

use thiserror::Error;

use crate::chem::ChemError;

pub use cover::{verify_cover, CoverReport, CoverViolation};
pub use decompose::{clique_label, decompose, fragment_molecule, Clique, JunctionTree};
pub use vocab::{build_vocabulary, Vocabulary};

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("molecule has {components} disconnected fragments")]
    MultiFragment { components: usize },
    #[error("cannot decompose an empty molecule")]
    Empty,
    #[error("molecule '{id}': {source}")]
    Molecule {
        id: String,
        #[source]
        source: Box<TreeError>,
    },
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error("vocabulary line {line}: {msg}")]
    VocabFormat { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
