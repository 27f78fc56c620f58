use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

use super::{ModelConfig, ModelError, SeqEncoderMode};

pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";
/// Number of distinct 3-mers over the 20-letter alphabet.
pub const KMER_DIM: usize = 20 * 20 * 20;

/// A ligase and its binding-site residues, optionally with a precomputed
/// embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LigaseContext {
    pub id: String,
    pub sequence: String,
    pub external: Option<Vec<f64>>,
}

impl LigaseContext {
    pub fn new(id: impl Into<String>, sequence: impl Into<String>) -> LigaseContext {
        LigaseContext { id: id.into(), sequence: sequence.into(), external: None }
    }

    fn residue_indices(&self) -> Result<Vec<usize>, ModelError> {
        self.sequence
            .chars()
            .enumerate()
            .map(|(pos, c)| {
                AMINO_ACIDS
                    .find(c.to_ascii_uppercase())
                    .ok_or_else(|| ModelError::Residue { ligase: self.id.clone(), pos, residue: c })
            })
            .collect()
    }
}

/// L2-normalised counts of overlapping 3-mers, indexed `a·400 + b·20 + c`.
/// Sequences shorter than three residues give the zero vector.
pub fn kmer_counts(ctx: &LigaseContext) -> Result<Vec<f64>, ModelError> {
    let idx = ctx.residue_indices()?;
    let mut counts = vec![0.0; KMER_DIM];
    for w in idx.windows(3) {
        counts[w[0] * 400 + w[1] * 20 + w[2]] += 1.0;
    }
    let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in counts.iter_mut() {
            *c /= norm;
        }
    }
    Ok(counts)
}

/// One row per residue.
pub fn one_hot_residues(ctx: &LigaseContext) -> Result<Tensor, ModelError> {
    let idx = ctx.residue_indices()?;
    let mut t = Tensor::zeros(idx.len(), AMINO_ACIDS.len());
    for (r, &i) in idx.iter().enumerate() {
        t.set(r, i, 1.0);
    }
    Ok(t)
}

/// Encoder-ready form of a ligase for one sequence-encoder mode.
#[derive(Debug, Clone, PartialEq)]
pub enum SeqInput {
    Kmer(Tensor),
    Residues(Tensor),
    External(Tensor),
}

impl SeqInput {
    pub fn new(ctx: &LigaseContext, cfg: &ModelConfig) -> Result<SeqInput, ModelError> {
        let err = |msg: String| ModelError::Ligase { ligase: ctx.id.clone(), msg };
        match cfg.seq_encoder {
            SeqEncoderMode::Kmer => {
                if ctx.sequence.is_empty() {
                    return Err(err("empty sequence".into()));
                }
                Ok(SeqInput::Kmer(Tensor::row(&kmer_counts(ctx)?)))
            }
            SeqEncoderMode::OneHotRnn => {
                if ctx.sequence.is_empty() {
                    return Err(err("empty sequence".into()));
                }
                Ok(SeqInput::Residues(one_hot_residues(ctx)?))
            }
            SeqEncoderMode::External => {
                let v = ctx.external.as_ref().ok_or_else(|| err("no external vector".into()))?;
                if v.len() != cfg.external_dim {
                    return Err(err(format!("external vector has {} values, expected {}", v.len(), cfg.external_dim)));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(err("external vector is not finite".into()));
                }
                Ok(SeqInput::External(Tensor::row(v)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aaa_has_one_kmer() {
        let c = kmer_counts(&LigaseContext::new("x", "AAA")).unwrap();
        assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(c[0], 1.0);
    }

    #[test]
    fn reversed_sequence_differs() {
        let a = kmer_counts(&LigaseContext::new("x", "ACD")).unwrap();
        let b = kmer_counts(&LigaseContext::new("x", "DCA")).unwrap();
        assert_ne!(a, b);
        // A=0, C=1, D=2
        assert_eq!(a[0 * 400 + 1 * 20 + 2], 1.0);
        assert_eq!(b[2 * 400 + 1 * 20], 1.0);
    }

    #[test]
    fn rejects_unknown_residue() {
        let err = kmer_counts(&LigaseContext::new("VHL", "ACXB")).unwrap_err();
        assert!(matches!(err, ModelError::Residue { pos: 2, residue: 'X', .. }), "{err}");
    }

    #[test]
    fn external_dimension_is_checked() {
        let cfg = ModelConfig { seq_encoder: SeqEncoderMode::External, external_dim: 3, ..ModelConfig::default() };
        let mut ctx = LigaseContext::new("x", "");
        assert!(SeqInput::new(&ctx, &cfg).is_err());
        ctx.external = Some(vec![1.0, 2.0]);
        assert!(SeqInput::new(&ctx, &cfg).is_err());
        ctx.external = Some(vec![1.0, 2.0, 3.0]);
        assert!(SeqInput::new(&ctx, &cfg).is_ok());
    }
}
