use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Tensor, TensorError};
use crate::chem::stable_hash;

/// Weights drawn from N(0, 2 / (fan_in + fan_out)) for a `[fan_in, fan_out]` shape.
pub fn xavier_normal(shape: &[usize], rng: &mut ChaCha8Rng) -> Result<Tensor, TensorError> {
    let &[fan_in, fan_out] = shape else {
        return Err(TensorError::Invalid { op: "xavier_normal", msg: format!("shape {shape:?} is not 2-D") });
    };
    if fan_in + fan_out == 0 {
        return Ok(Tensor::zeros(fan_in, fan_out));
    }
    let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("finite std");
    let data = (0..fan_in * fan_out).map(|_| normal.sample(rng)).collect();
    Tensor::new(fan_in, fan_out, data)
}

pub fn zeros_bias(n: usize) -> Tensor {
    Tensor::zeros(1, n)
}

/// Saved position of one named stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub name: String,
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

/// Independent ChaCha8 streams derived from one seed by hashing the stream
/// name, so adding a consumer never shifts another stream's draws.
#[derive(Debug, Clone)]
pub struct RngStreams {
    seed: u64,
    streams: BTreeMap<String, ChaCha8Rng>,
}

impl RngStreams {
    pub fn new(seed: u64) -> RngStreams {
        RngStreams { seed, streams: BTreeMap::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn derive(seed: u64, name: &str) -> ChaCha8Rng {
        let words: Vec<u64> = name.bytes().map(u64::from).collect();
        ChaCha8Rng::seed_from_u64(stable_hash(&words) ^ seed)
    }

    pub fn stream(&mut self, name: &str) -> &mut ChaCha8Rng {
        let seed = self.seed;
        self.streams.entry(name.to_string()).or_insert_with(|| Self::derive(seed, name))
    }

    pub fn states(&self) -> Vec<RngState> {
        self.streams
            .iter()
            .map(|(name, rng)| RngState {
                name: name.clone(),
                seed: rng.get_seed(),
                stream: rng.get_stream(),
                word_pos: rng.get_word_pos(),
            })
            .collect()
    }

    pub fn restore(seed: u64, states: &[RngState]) -> RngStreams {
        let mut out = RngStreams::new(seed);
        for s in states {
            let mut rng = ChaCha8Rng::from_seed(s.seed);
            rng.set_stream(s.stream);
            rng.set_word_pos(s.word_pos);
            out.streams.insert(s.name.clone(), rng);
        }
        out
    }
}
