//! Central-difference check of the full training loss against the tape
//! gradients, per parameter block.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::chem::parse_smiles;
use crate::jtree::{build_vocabulary, decompose};
use crate::tensor::{Bound, ParamMap, RngStreams, Tape};

use super::network::Net;
use super::train::{batch_loss, init_params, prepare_example, Example, Noise};
use super::{FusionMode, LigaseContext, ModelConfig, ModelError, SeqEncoderMode, SeqInput};

const STEP: f64 = 1e-4;
const REL_FLOOR: f64 = 1e-3;
/// Redraws allowed when a probe straddles a ReLU kink.
const REDRAWS: usize = 8;

const BATCH: [&str; 3] = ["CCO", "CC(C)c1ccccc1", "CN1CCCC1=O"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAudit {
    /// Parameter-name prefix: mpn, tree, head, seq, attn, fuse or dec.
    pub block: String,
    pub trials: usize,
    pub probes: usize,
    /// Probes redrawn because a ReLU input changed sign within ±h.
    pub kinks_skipped: usize,
    pub max_rel_error: f64,
    pub worst_param: String,
}

fn audit_config(trial: usize) -> ModelConfig {
    let (fusion, seq_encoder) = match trial % 4 {
        0 => (FusionMode::Concat, SeqEncoderMode::Kmer),
        1 => (FusionMode::CrossAttention, SeqEncoderMode::OneHotRnn),
        2 => (FusionMode::Concat, SeqEncoderMode::External),
        _ => (FusionMode::CrossAttention, SeqEncoderMode::Kmer),
    };
    ModelConfig {
        hidden: 5,
        z_tree: 3,
        z_graph: 2,
        seq_embed: 4,
        fused: 4,
        mp_iters: 2,
        tree_iters: 2,
        fusion,
        seq_encoder,
        heads: if fusion == FusionMode::CrossAttention { 2 } else { 1 },
        external_dim: 6,
        assembly_bits: 32,
        ..ModelConfig::default()
    }
}

struct Setup {
    cfg: ModelConfig,
    examples: Vec<Example>,
    ligases: Vec<SeqInput>,
    noise: Vec<Noise>,
    beta: f64,
}

impl Setup {
    fn loss(&self, params: &ParamMap) -> Result<(f64, Vec<bool>), ModelError> {
        let mut tape = Tape::new();
        let bound = Bound::register(params, &mut tape);
        let mut net = Net { tape: &mut tape, bound: &bound, cfg: &self.cfg };
        let batch: Vec<&Example> = self.examples.iter().collect();
        let (loss, _) = batch_loss(&mut net, &batch, &self.ligases, Some(&self.noise), self.beta)?;
        Ok((tape.value(loss).item(), tape.relu_pattern()))
    }

    fn gradients(&self, params: &ParamMap) -> Result<ParamMap, ModelError> {
        let mut tape = Tape::new();
        let bound = Bound::register(params, &mut tape);
        let mut net = Net { tape: &mut tape, bound: &bound, cfg: &self.cfg };
        let batch: Vec<&Example> = self.examples.iter().collect();
        let (loss, _) = batch_loss(&mut net, &batch, &self.ligases, Some(&self.noise), self.beta)?;
        let grads = tape.backward(loss)?;
        Ok(bound.gradients(&tape, &grads))
    }
}

fn setup(trial: usize, rngs: &mut RngStreams) -> Result<(Setup, ParamMap), ModelError> {
    let cfg = audit_config(trial);
    let mols: Vec<_> = BATCH.iter().map(|s| parse_smiles(s)).collect::<Result<_, _>>()?;
    let vocab = build_vocabulary(&mols)?;
    let rng = rngs.stream("audit");
    let mut examples = Vec::new();
    for m in &mols {
        let tree = decompose(m)?;
        let torsions: Vec<[f64; 3]> = (0..m.bond_count())
            .map(|_| {
                let theta: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                [theta.sin(), theta.cos(), 1.0]
            })
            .collect();
        examples.push(prepare_example(m, &tree, &torsions, &vocab, &cfg, 0)?);
    }
    let mut ctx = LigaseContext::new("audit", "MKTAYIAKQR");
    ctx.external = Some((0..cfg.external_dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    let ligases = vec![SeqInput::new(&ctx, &cfg)?];
    let noise = (0..examples.len()).map(|_| Noise::draw(&cfg, &mut *rng)).collect();
    let beta = rng.random_range(0.1..1.0);
    let mut params = init_params(&cfg, vocab.len(), rngs)?;
    // zero biases would leave half the bias blocks probing a symmetric point
    let jitter = Normal::new(0.0, 0.1).expect("valid normal");
    let rng = rngs.stream("audit");
    for t in params.values_mut() {
        for x in t.data_mut() {
            *x += jitter.sample(&mut *rng);
        }
    }
    Ok((Setup { cfg, examples, ligases, noise, beta }, params))
}

/// Runs `trials` randomized configurations (cycling fusion and sequence
/// modes) over a fixed three-molecule batch. Each parameter tensor is
/// probed at its largest-gradient entry and at one random entry with
/// central differences of step 1e-4. Probes whose ±h evaluations cross a
/// ReLU kink are redrawn, since the loss is not differentiable there.
pub fn audit_model(trials: usize, seed: u64) -> Result<Vec<BlockAudit>, ModelError> {
    let mut blocks: BTreeMap<String, BlockAudit> = BTreeMap::new();
    let mut rngs = RngStreams::new(seed);
    for trial in 0..trials {
        let (s, params) = setup(trial, &mut rngs)?;
        let (_, base_pattern) = s.loss(&params)?;
        let grads = s.gradients(&params)?;
        let mut seen_blocks = Vec::new();
        for (name, g) in &grads {
            let block = name.split('.').next().unwrap_or(name).to_string();
            let entry = blocks.entry(block.clone()).or_insert_with(|| BlockAudit {
                block: block.clone(),
                trials: 0,
                probes: 0,
                kinks_skipped: 0,
                max_rel_error: 0.0,
                worst_param: String::new(),
            });
            if !seen_blocks.contains(&block) {
                entry.trials += 1;
                seen_blocks.push(block);
            }
            let largest = g
                .data()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map_or(0, |(i, _)| i);
            let len = g.data().len();
            let mut targets = vec![largest];
            for _ in 0..REDRAWS {
                targets.push(rngs.stream("audit").random_range(0..len));
            }
            let mut done = 0;
            for idx in targets {
                if done == 2 {
                    break;
                }
                let mut p = params.clone();
                let orig = p[name].data()[idx];
                p.get_mut(name).expect("present").data_mut()[idx] = orig + STEP;
                let (plus, pat_plus) = s.loss(&p)?;
                p.get_mut(name).expect("present").data_mut()[idx] = orig - STEP;
                let (minus, pat_minus) = s.loss(&p)?;
                if pat_plus != base_pattern || pat_minus != base_pattern {
                    entry.kinks_skipped += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * STEP);
                let analytic = g.data()[idx];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
                entry.probes += 1;
                if rel > entry.max_rel_error || entry.worst_param.is_empty() {
                    entry.max_rel_error = entry.max_rel_error.max(rel);
                    entry.worst_param = format!("{name}[{idx}] trial {trial}");
                }
                done += 1;
            }
        }
    }
    Ok(blocks.into_values().collect())
}
