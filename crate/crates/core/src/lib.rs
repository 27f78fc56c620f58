//! Ligase-conditioned junction-tree VAE toolkit for molecular glue design.

pub mod chem;
pub mod data;
pub mod eval;
pub mod geom;
pub mod jtree;
pub mod model;
pub mod report;
pub mod tensor;
