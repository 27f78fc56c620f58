//! Compound ingestion, ADMET windows, affinity classes, summary tables,
//! scaffold counts, training pairs and ligase sequence files.

mod affinity;
mod filter;
mod ingest;
mod ligases;
mod pairs;
mod summary;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use affinity::{affinity_count_table, classify_affinity, AffinityClass, AffinityRow, AffinityTable};
pub use filter::{admet_filter, FilterOutcome, FilterSpec, Interval};
pub use ingest::{ingest_compounds, ingest_compounds_file, write_compounds_csv, IngestResult, Rejection, MANDATORY_COLUMNS};
pub use ligases::{attach_embeddings, parse_ligase_fasta};
pub use pairs::{build_training_pairs, Exclusion, PairPolicy, TrainingPair};
pub use summary::{scaffold_frequency, summarize, summarize_properties, summary_csv, PropertySummary, ACYCLIC};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing mandatory columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("unknown ligase {0:?}")]
    UnknownLigase(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("invalid filter bounds: {0}")]
    Bounds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Library {
    Chembl,
    Vitas,
    Other,
}

impl Library {
    /// Case-insensitive; anything unrecognised is `Other`.
    pub fn parse(s: &str) -> Library {
        match s.trim().to_ascii_lowercase().as_str() {
            "chembl" => Library::Chembl,
            "vitas" | "vitas-m" => Library::Vitas,
            _ => Library::Other,
        }
    }
}

impl fmt::Display for Library {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Library::Chembl => "ChEMBL",
            Library::Vitas => "Vitas",
            Library::Other => "other",
        })
    }
}

/// One row of a compound library. Absent numeric cells are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundRecord {
    pub id: String,
    pub smiles: String,
    pub library: Library,
    pub mw: Option<f64>,
    pub logp: Option<f64>,
    pub logs: Option<f64>,
    pub logherg: Option<f64>,
    pub metab: Option<u32>,
    pub ro5_violations: Option<u32>,
    /// Docking score per ligase id, kcal/mol.
    pub dock: std::collections::BTreeMap<String, f64>,
    /// 1-based line in the source file (header is line 1).
    pub line: usize,
}
