//! Molecular graphs: SMILES I/O, ring and aromaticity perception, valence
//! checks, descriptors, scaffolds and fingerprints.

mod aromatic;
mod canon;
mod descriptors;
mod element;
mod fingerprint;
mod kekule;
mod molecule;
mod rings;
mod scaffold;
mod smiles;
mod valence;

use thiserror::Error;

pub use aromatic::aromatic_rings;
pub use canon::{canonical_ranks, write_canonical_smiles, write_smiles_with_ranks};
pub(crate) use canon::implied_bare_h;
pub use descriptors::{compute_descriptors, crippen_logp, Descriptors};
pub use element::Element;
pub use fingerprint::{
    circular_fingerprint, stable_hash, tanimoto, Fingerprint, DEFAULT_NBITS, DEFAULT_RADIUS,
};
pub(crate) use kekule::{bare_aromatic_fill, bare_fill};
pub use molecule::{Atom, Bond, BondOrder, Molecule};
pub use rings::{perceive_rings, ring_bonds};
pub use scaffold::murcko_scaffold;
pub use smiles::{parse_fragment, parse_smiles};
pub(crate) use smiles::{sanitize, RawAtom, RawBond};
pub use valence::{check_valence, has_aromatic_bonds, ValenceProblem, ValenceReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChemError {
    #[error("SMILES syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unsupported element '{0}'")]
    UnknownElement(String),
    #[error("valence error: {0}")]
    Valence(String),
    #[error("cannot localise aromatic system in '{text}' (atoms {atoms:?})")]
    Kekulize { atoms: Vec<usize>, text: String },
    #[error("invalid molecular graph: {0}")]
    Graph(String),
}

/// Parse a corpus of SMILES lines, skipping blanks and `#` comments. The
/// first whitespace-separated token of each line is the SMILES.
pub fn read_smiles_lines(text: &str) -> Vec<(usize, Result<Molecule, ChemError>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                return None;
            }
            let smi = line.split_whitespace().next()?;
            Some((i + 1, parse_smiles(smi)))
        })
        .collect()
}
