use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FusionMode {
    Concat,
    CrossAttention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeqEncoderMode {
    Kmer,
    OneHotRnn,
    External,
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionMode::Concat => "concat",
            FusionMode::CrossAttention => "cross_attention",
        })
    }
}

impl FromStr for FusionMode {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concat" => Ok(FusionMode::Concat),
            "cross_attention" => Ok(FusionMode::CrossAttention),
            _ => Err(ModelError::Config(format!("unknown fusion mode {s:?}"))),
        }
    }
}

impl fmt::Display for SeqEncoderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeqEncoderMode::Kmer => "kmer",
            SeqEncoderMode::OneHotRnn => "onehot_rnn",
            SeqEncoderMode::External => "external",
        })
    }
}

impl FromStr for SeqEncoderMode {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kmer" => Ok(SeqEncoderMode::Kmer),
            "onehot_rnn" => Ok(SeqEncoderMode::OneHotRnn),
            "external" => Ok(SeqEncoderMode::External),
            _ => Err(ModelError::Config(format!("unknown sequence encoder {s:?}"))),
        }
    }
}

/// Widths and modes. Every parameter shape is a function of this and the
/// vocabulary size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
    pub z_tree: usize,
    pub z_graph: usize,
    pub seq_embed: usize,
    pub fused: usize,
    pub mp_iters: usize,
    pub tree_iters: usize,
    pub max_decode_nodes: usize,
    pub fusion: FusionMode,
    pub seq_encoder: SeqEncoderMode,
    /// Attention heads; must divide `seq_embed`.
    pub heads: usize,
    /// Width of precomputed ligase vectors in external mode.
    pub external_dim: usize,
    /// Fingerprint length used to embed attachment candidates.
    pub assembly_bits: usize,
    pub max_candidates: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 64,
            z_tree: 16,
            z_graph: 16,
            seq_embed: 128,
            fused: 32,
            mp_iters: 3,
            tree_iters: 4,
            max_decode_nodes: 30,
            fusion: FusionMode::Concat,
            seq_encoder: SeqEncoderMode::Kmer,
            heads: 1,
            external_dim: 0,
            assembly_bits: 256,
            max_candidates: 100,
        }
    }
}

impl ModelConfig {
    pub fn z_mol(&self) -> usize {
        self.z_tree + self.z_graph
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("hidden", self.hidden),
            ("z_tree", self.z_tree),
            ("z_graph", self.z_graph),
            ("seq_embed", self.seq_embed),
            ("fused", self.fused),
            ("mp_iters", self.mp_iters),
            ("tree_iters", self.tree_iters),
            ("max_decode_nodes", self.max_decode_nodes),
            ("heads", self.heads),
            ("assembly_bits", self.assembly_bits),
            ("max_candidates", self.max_candidates),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be at least 1")));
        }
        if self.fused > self.z_mol() + self.seq_embed {
            return Err(ModelError::Config(format!(
                "fused ({}) exceeds z_tree + z_graph + seq_embed ({})",
                self.fused,
                self.z_mol() + self.seq_embed
            )));
        }
        if self.seq_embed % self.heads != 0 {
            return Err(ModelError::Config(format!(
                "heads ({}) must divide seq_embed ({})",
                self.heads, self.seq_embed
            )));
        }
        if !self.assembly_bits.is_power_of_two() {
            return Err(ModelError::Config("assembly_bits must be a power of two".into()));
        }
        if self.seq_encoder == SeqEncoderMode::External && self.external_dim == 0 {
            return Err(ModelError::Config("external sequence mode needs external_dim".into()));
        }
        Ok(())
    }

    /// `key = value` lines, readable by [`ModelConfig::set`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hidden", self.hidden.to_string()),
            ("z_tree", self.z_tree.to_string()),
            ("z_graph", self.z_graph.to_string()),
            ("seq_embed", self.seq_embed.to_string()),
            ("fused", self.fused.to_string()),
            ("mp_iters", self.mp_iters.to_string()),
            ("tree_iters", self.tree_iters.to_string()),
            ("max_decode_nodes", self.max_decode_nodes.to_string()),
            ("fusion_mode", self.fusion.to_string()),
            ("seq_encoder_mode", self.seq_encoder.to_string()),
            ("heads", self.heads.to_string()),
            ("external_dim", self.external_dim.to_string()),
            ("assembly_bits", self.assembly_bits.to_string()),
            ("max_candidates", self.max_candidates.to_string()),
        ]
    }

    /// Applies one `key = value` setting; returns false for keys this
    /// config does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ModelError> {
        let num = || {
            value
                .parse::<usize>()
                .map_err(|_| ModelError::Config(format!("{key}: {value:?} is not a count")))
        };
        match key {
            "hidden" => self.hidden = num()?,
            "z_tree" => self.z_tree = num()?,
            "z_graph" => self.z_graph = num()?,
            "seq_embed" => self.seq_embed = num()?,
            "fused" => self.fused = num()?,
            "mp_iters" => self.mp_iters = num()?,
            "tree_iters" => self.tree_iters = num()?,
            "max_decode_nodes" => self.max_decode_nodes = num()?,
            "fusion_mode" => self.fusion = value.parse()?,
            "seq_encoder_mode" => self.seq_encoder = value.parse()?,
            "heads" => self.heads = num()?,
            "external_dim" => self.external_dim = num()?,
            "assembly_bits" => self.assembly_bits = num()?,
            "max_candidates" => self.max_candidates = num()?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_text(text: &str) -> Result<ModelConfig, ModelError> {
        let mut cfg = ModelConfig::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::Config(format!("expected key = value, got {line:?}")))?;
            if !cfg.set(k.trim(), v.trim())? {
                return Err(ModelError::Config(format!("unknown model key {:?}", k.trim())));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// β annealing and optimisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSchedule {
    pub epochs: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    /// Epochs per decay step; 1 decays every epoch.
    pub lr_decay_every: u64,
    pub beta_step: f64,
    pub beta_max: f64,
    pub clip_norm: f64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            epochs: 500,
            batch_size: 8,
            lr: 1e-3,
            lr_decay: 0.9,
            lr_decay_every: 1,
            beta_step: 0.002,
            beta_max: 1.0,
            clip_norm: 50.0,
        }
    }
}

impl TrainingSchedule {
    /// β after `batches` optimiser steps: `min(beta_max, beta_step · batches)`.
    pub fn beta(&self, batches: u64) -> f64 {
        (self.beta_step * batches as f64).min(self.beta_max)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ModelError> {
        let bad = || ModelError::Config(format!("{key}: bad value {value:?}"));
        match key {
            "epochs" => self.epochs = value.parse().map_err(|_| bad())?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad())?,
            "lr" => self.lr = value.parse().map_err(|_| bad())?,
            "lr_decay" => self.lr_decay = value.parse().map_err(|_| bad())?,
            "lr_decay_every" => self.lr_decay_every = value.parse().map_err(|_| bad())?,
            "beta_step" => self.beta_step = value.parse().map_err(|_| bad())?,
            "beta_max" => self.beta_max = value.parse().map_err(|_| bad())?,
            "clip_norm" => self.clip_norm = value.parse().map_err(|_| bad())?,
            _ => return Ok(false),
        }
        if self.batch_size == 0 || self.lr_decay_every == 0 || !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return Err(bad());
        }
        Ok(true)
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("lr_decay", format!("{:?}", self.lr_decay)),
            ("lr_decay_every", self.lr_decay_every.to_string()),
            ("beta_step", format!("{:?}", self.beta_step)),
            ("beta_max", format!("{:?}", self.beta_max)),
            ("clip_norm", format!("{:?}", self.clip_norm)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_schedule() {
        let s = TrainingSchedule::default();
        assert_eq!(s.beta(0), 0.0);
        assert_eq!(s.beta(250), 0.5);
        assert_eq!(s.beta(500), 1.0);
        assert_eq!(s.beta(10_000), 1.0);
        for t in 0..1000 {
            assert!(s.beta(t + 1) >= s.beta(t));
        }
    }

    #[test]
    fn config_text_round_trip() {
        let mut c = ModelConfig { fusion: FusionMode::CrossAttention, heads: 4, ..ModelConfig::default() };
        c.hidden = 12;
        let back = ModelConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!(ModelConfig::from_text("bogus = 1").is_err());
        assert!(ModelConfig::from_text("fused = 1000").is_err());
        assert!(ModelConfig::from_text("heads = 3").is_err());
    }
}
