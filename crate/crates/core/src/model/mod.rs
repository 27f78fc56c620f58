//! Ligase-conditioned junction-tree VAE: graph and tree encoders, a
//! protein-sequence encoder, latent fusion, a conditional tree decoder with
//! attachment scoring, training and sampling.

mod assembly;
mod audit;
mod config;
mod features;
mod generate;
mod network;
mod sequence;
mod train;

use thiserror::Error;

use crate::chem::ChemError;
use crate::jtree::TreeError;
use crate::tensor::{CheckpointError, TensorError};

pub use assembly::{enumerate_candidates, Candidate, CandidateSet, Frag, FragAtom};
pub use audit::{audit_model, BlockAudit};
pub use config::{FusionMode, ModelConfig, SeqEncoderMode, TrainingSchedule};
pub use features::{atom_features, bond_features, ATOM_FEATURES, BOND_FEATURES};
pub use generate::{generate, GeneratedSample, SampleStatus};
pub use network::{
    encode_ligase, encode_molecule, fuse_latent, kl_divergence, reparameterize, Fusion, MoleculeLatent,
};
pub use sequence::{kmer_counts, one_hot_residues, LigaseContext, SeqInput, AMINO_ACIDS, KMER_DIM};
pub use train::{init_params, prepare_example, Example, LossReport, Trainer};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("clique label {0:?} is not in the vocabulary")]
    VocabMiss(String),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("unknown residue {residue:?} at position {pos} of ligase {ligase}")]
    Residue { ligase: String, pos: usize, residue: char },
    #[error("ligase {ligase}: {msg}")]
    Ligase { ligase: String, msg: String },
    #[error("input mismatch: {0}")]
    Input(String),
    #[error("non-finite loss in batch {batch} of epoch {epoch}")]
    NonFinite { epoch: u64, batch: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
