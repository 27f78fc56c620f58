//! Conformers: SDF input, rotatable bonds, dihedral torsions and RMSD.

mod kabsch;
mod sdf;
mod torsion;

use thiserror::Error;

use crate::chem::ChemError;

pub use kabsch::{kabsch_align, kabsch_rmsd, Alignment};
pub use sdf::{parse_sdf_v2000, write_sdf_v2000};
pub use torsion::{
    annotate_torsions, bond_torsion_features, dihedral_angle, find_rotatable_bonds,
    TorsionFeatures,
};

pub type Point = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("record {record}: counts line declares {declared} {what}, found {found}")]
    CountsMismatch {
        record: usize,
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("record {record}: unsupported version tag '{tag}'")]
    UnsupportedVersion { record: usize, tag: String },
    #[error("record {record}, line {line}: {msg}")]
    Format { record: usize, line: usize, msg: String },
    #[error("record {record}: {source}")]
    Chem {
        record: usize,
        #[source]
        source: ChemError,
    },
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("conformer sizes differ: {0} vs {1} atoms")]
    SizeMismatch(usize, usize),
    #[error("non-finite coordinate for atom {0}")]
    NonFinite(usize),
}

/// 3D coordinates in Ångström, one point per atom of the owning molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformer {
    coords: Vec<Point>,
}

impl Conformer {
    pub fn new(coords: Vec<Point>) -> Result<Conformer, GeomError> {
        if let Some(i) = coords.iter().position(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(GeomError::NonFinite(i));
        }
        Ok(Conformer { coords })
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Apply `p -> rotation * p + shift` to every point.
    pub fn transformed(&self, rotation: &[[f64; 3]; 3], shift: Point) -> Conformer {
        let coords = self
            .coords
            .iter()
            .map(|p| {
                let mut q = shift;
                for (r, row) in rotation.iter().enumerate() {
                    q[r] += row[0] * p[0] + row[1] * p[1] + row[2] * p[2];
                }
                q
            })
            .collect();
        Conformer { coords }
    }
}
