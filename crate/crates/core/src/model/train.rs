use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chem::{Molecule, write_canonical_smiles};
use crate::jtree::{fragment_molecule, JunctionTree, Vocabulary};
use crate::tensor::{
    clip_global_norm, xavier_normal, AdamState, Bound, Checkpoint, LrSchedule, ParamMap, RngStreams, Tape,
    Tensor, TensorError, Var,
};

use super::assembly::{candidate, enumerate_candidates, merge, Frag};
use super::features::{GraphInput, TreeInput};
use super::network::{param_shapes, Net};
use super::{ModelConfig, ModelError, SeqInput, TrainingSchedule};

/// Teacher-forcing script for the depth-first decoder. State 0 is the
/// initial hidden state; state `t + 1` follows input `t`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DecodePlan {
    pub inputs: Vec<usize>,
    /// (state, vocabulary index)
    pub labels: Vec<(usize, usize)>,
    /// (state, 1 = expand a new child, 0 = backtrack)
    pub topology: Vec<(usize, f64)>,
}

impl DecodePlan {
    pub fn new(tree: &JunctionTree, labels: &[usize]) -> DecodePlan {
        let children = tree.children();
        let mut plan = DecodePlan { inputs: Vec::new(), labels: Vec::new(), topology: Vec::new() };
        if labels.is_empty() {
            return plan;
        }
        plan.labels.push((0, labels[tree.root]));
        plan.inputs.push(labels[tree.root]);
        fn visit(u: usize, children: &[Vec<usize>], labels: &[usize], plan: &mut DecodePlan) {
            for &c in &children[u] {
                let state = plan.inputs.len();
                plan.topology.push((state, 1.0));
                plan.labels.push((state, labels[c]));
                plan.inputs.push(labels[c]);
                visit(c, children, labels, plan);
                plan.topology.push((plan.inputs.len(), 0.0));
                plan.inputs.push(labels[u]);
            }
        }
        visit(tree.root, &children, labels, &mut plan);
        plan.topology.push((plan.inputs.len(), 0.0));
        plan
    }
}

/// Candidate attachments for one tree edge and the index of the true one
/// (`None` when the cap cut it off).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AssemblyTarget {
    pub features: Tensor,
    pub target: Option<usize>,
}

/// A molecule preprocessed for training: encoder inputs, decoder script and
/// attachment candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub smiles: String,
    /// Index into the ligase inputs passed alongside the examples.
    pub ligase: usize,
    pub(crate) graph: GraphInput,
    pub(crate) tree: TreeInput,
    pub(crate) plan: DecodePlan,
    pub(crate) assembly: Vec<AssemblyTarget>,
    /// Tree edges whose true attachment fell outside the candidate cap.
    pub candidate_overflow: usize,
}

impl Example {
    pub fn tree_nodes(&self) -> usize {
        self.tree.labels.len()
    }
}

fn assembly_targets(
    m: &Molecule,
    tree: &JunctionTree,
    cfg: &ModelConfig,
) -> (Vec<AssemblyTarget>, usize) {
    let frag_of = |node: usize| {
        let c = &tree.nodes[node];
        Frag::from_molecule(&fragment_molecule(m, &c.atoms, c.is_ring))
    };
    let mut partial = frag_of(tree.root);
    let mut position: HashMap<usize, usize> =
        tree.nodes[tree.root].atoms.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let children = tree.children();
    let mut out = Vec::new();
    let mut overflow = 0;
    let mut stack = vec![tree.root];
    let mut order = Vec::new();
    while let Some(u) = stack.pop() {
        order.push(u);
        for &c in children[u].iter().rev() {
            stack.push(c);
        }
    }
    for &u in &order {
        for &c in &children[u] {
            let child = frag_of(c);
            let parent_atoms: Vec<usize> = tree.nodes[u].atoms.iter().map(|a| position[a]).collect();
            let pairs: Vec<(usize, usize)> = tree.nodes[c]
                .atoms
                .iter()
                .enumerate()
                .filter_map(|(j, a)| position.get(a).map(|&p| (j, p)))
                .collect();
            let (merged, map) = merge(&partial, &child, &pairs);
            let truth = candidate(merged.clone(), map.clone(), cfg.assembly_bits);
            let ring_fusion = tree.nodes[u].is_ring && tree.nodes[c].is_ring;
            let truth_smiles = truth.as_ref().map(|t| t.smiles.clone());
            let set = enumerate_candidates(
                &partial,
                &parent_atoms,
                &child,
                ring_fusion,
                cfg.assembly_bits,
                cfg.max_candidates,
                truth,
            );
            let target = truth_smiles.and_then(|s| set.position(&s));
            if target.is_none() {
                overflow += 1;
            }
            let rows: Vec<f64> = set.candidates.iter().flat_map(|c| c.features.iter().copied()).collect();
            let features = Tensor::new(set.candidates.len(), cfg.assembly_bits, rows).expect("sized rows");
            out.push(AssemblyTarget { features, target });
            for (j, &a) in tree.nodes[c].atoms.iter().enumerate() {
                position.insert(a, map[j]);
            }
            partial = merged;
        }
    }
    (out, overflow)
}

/// Builds every input the model needs for one molecule.
pub fn prepare_example(
    m: &Molecule,
    tree: &JunctionTree,
    torsions: &[[f64; 3]],
    vocab: &Vocabulary,
    cfg: &ModelConfig,
    ligase: usize,
) -> Result<Example, ModelError> {
    let graph = GraphInput::new(m, torsions)?;
    let tree_in = TreeInput::new(tree, vocab)?;
    let plan = DecodePlan::new(tree, &tree_in.labels);
    let (assembly, candidate_overflow) = assembly_targets(m, tree, cfg);
    Ok(Example {
        smiles: write_canonical_smiles(m),
        ligase,
        graph,
        tree: tree_in,
        plan,
        assembly,
        candidate_overflow,
    })
}

/// Xavier-normal weights and zero biases from the "init" stream, in a fixed order.
pub fn init_params(cfg: &ModelConfig, vocab_len: usize, rngs: &mut RngStreams) -> Result<ParamMap, ModelError> {
    cfg.validate()?;
    if vocab_len == 0 {
        return Err(ModelError::Config("empty vocabulary".into()));
    }
    let mut params = ParamMap::new();
    for (name, r, c, bias) in param_shapes(cfg, vocab_len) {
        let t = if bias { Tensor::zeros(r, c) } else { xavier_normal(&[r, c], rngs.stream("init"))? };
        params.insert(name, t);
    }
    Ok(params)
}

/// Epoch (or batch) aggregate. Losses are per-molecule means; accuracies
/// are over all decisions, 1.0 when there were none.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub recon_topology: f64,
    pub recon_label: f64,
    pub recon_assembly: f64,
    pub kl: f64,
    /// KL-weighted mean β, so that `total = recon + beta · kl`.
    pub beta: f64,
    pub wacc: f64,
    pub tacc: f64,
    pub sacc: f64,
}

impl LossReport {
    pub fn recon(&self) -> f64 {
        self.recon_topology + self.recon_label + self.recon_assembly
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Tally {
    molecules: usize,
    total: f64,
    topo: f64,
    label: f64,
    assm: f64,
    kl: f64,
    beta_kl: f64,
    beta_sum: f64,
    counts: [(usize, usize); 3],
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        self.molecules += other.molecules;
        self.total += other.total;
        self.topo += other.topo;
        self.label += other.label;
        self.assm += other.assm;
        self.kl += other.kl;
        self.beta_kl += other.beta_kl;
        self.beta_sum += other.beta_sum;
        for i in 0..3 {
            self.counts[i].0 += other.counts[i].0;
            self.counts[i].1 += other.counts[i].1;
        }
    }

    pub fn report(&self) -> LossReport {
        let n = self.molecules.max(1) as f64;
        let acc = |(hit, all): (usize, usize)| if all == 0 { 1.0 } else { hit as f64 / all as f64 };
        let beta = if self.kl > 0.0 { self.beta_kl / self.kl } else { self.beta_sum / n };
        LossReport {
            total: self.total / n,
            recon_topology: self.topo / n,
            recon_label: self.label / n,
            recon_assembly: self.assm / n,
            kl: self.kl / n,
            beta,
            wacc: acc(self.counts[0]),
            tacc: acc(self.counts[1]),
            sacc: acc(self.counts[2]),
        }
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Reparameterisation noise for one example; `None` decodes from the means.
#[derive(Debug, Clone)]
pub(crate) struct Noise {
    pub tree: Tensor,
    pub graph: Tensor,
}

impl Noise {
    pub fn draw(cfg: &ModelConfig, rng: &mut impl rand::Rng) -> Noise {
        let mut row = |n: usize| Tensor::row(&(0..n).map(|_| StandardNormal.sample(rng)).collect::<Vec<f64>>());
        let tree = row(cfg.z_tree);
        let graph = row(cfg.z_graph);
        Noise { tree, graph }
    }
}

/// Loss of one batch on `tape`: mean over examples of
/// `topology + label + assembly + β · kl`.
pub(crate) fn batch_loss(
    net: &mut Net<'_>,
    batch: &[&Example],
    ligases: &[SeqInput],
    noise: Option<&[Noise]>,
    beta: f64,
) -> Result<(Var, Tally), ModelError> {
    let mut seq_cache: BTreeMap<usize, (Var, Var)> = BTreeMap::new();
    let mut losses = Vec::with_capacity(batch.len());
    let mut tally = Tally::default();
    for (i, ex) in batch.iter().enumerate() {
        let seq = ligases
            .get(ex.ligase)
            .ok_or_else(|| ModelError::Input(format!("ligase index {} out of range", ex.ligase)))?;
        let (z_seq, values) = match seq_cache.get(&ex.ligase) {
            Some(v) => *v,
            None => {
                let v = net.encode_seq(seq)?;
                seq_cache.insert(ex.ligase, v);
                v
            }
        };
        let (tm, tl) = net.encode_tree(&ex.tree)?;
        let (gm, gl) = net.encode_graph(&ex.graph)?;
        let (zt, zg) = match noise {
            Some(n) => (net.sample(tm, tl, &n[i].tree)?, net.sample(gm, gl, &n[i].graph)?),
            None => (tm, gm),
        };
        let z_mol = net.tape.concat(&[zt, zg], 1)?;
        let fusion = net.fuse(z_mol, z_seq, values)?;
        let kl_t = net.kl(tm, tl)?;
        let kl_g = net.kl(gm, gl)?;
        let kl = net.tape.add(kl_t, kl_g)?;
        let (topo, label, assm, counts) = decode_teacher_forced(net, fusion.fused, ex)?;
        let recon_a = net.tape.add(topo, label)?;
        let recon = net.tape.add(recon_a, assm)?;
        let weighted = net.tape.scale(kl, beta)?;
        let loss = net.tape.add(recon, weighted)?;
        let v = |t: &Tape, x: Var| t.value(x).item();
        let one = Tally {
            molecules: 1,
            total: v(net.tape, loss),
            topo: v(net.tape, topo),
            label: v(net.tape, label),
            assm: v(net.tape, assm),
            kl: v(net.tape, kl),
            beta_kl: beta * v(net.tape, kl),
            beta_sum: beta,
            counts,
        };
        tally.add(&one);
        losses.push(loss);
    }
    let all = net.tape.concat(&losses, 0)?;
    let mean = net.tape.mean(all)?;
    Ok((mean, tally))
}

type Counts = [(usize, usize); 3];

fn decode_teacher_forced(net: &mut Net<'_>, fused: Var, ex: &Example) -> Result<(Var, Var, Var, Counts), TensorError> {
    let plan = &ex.plan;
    let mut h = net.decoder_init(fused)?;
    let mut states = vec![h];
    let gx = net.gru_inputs(&plan.inputs, fused)?;
    let width = net.tape.value(gx).cols();
    for t in 0..plan.inputs.len() {
        let row = net.tape.slice(gx, t, 1, 0, width)?;
        h = net.gru_step(row, h)?;
        states.push(h);
    }
    let stacked = net.tape.concat(&states, 0)?;
    let readout = net.readout(stacked, fused)?;

    let label_rows: Vec<usize> = plan.labels.iter().map(|(s, _)| *s).collect();
    let label_targets: Vec<usize> = plan.labels.iter().map(|(_, l)| *l).collect();
    let lr = net.tape.gather_rows(readout, &label_rows)?;
    let logits = net.linear(lr, "dec.label")?;
    let label = net.tape.softmax_cross_entropy(logits, &label_targets)?;
    let lv = net.tape.value(logits);
    let label_hits = (0..lv.rows()).filter(|&r| argmax(lv.row_slice(r)) == label_targets[r]).count();

    let topo_rows: Vec<usize> = plan.topology.iter().map(|(s, _)| *s).collect();
    let topo_targets: Vec<f64> = plan.topology.iter().map(|(_, y)| *y).collect();
    let tr = net.tape.gather_rows(readout, &topo_rows)?;
    let topo_logits = net.linear(tr, "dec.topo")?;
    let topo = net.tape.binary_cross_entropy(topo_logits, &topo_targets)?;
    let tv = net.tape.value(topo_logits);
    let topo_hits = tv.data().iter().zip(&topo_targets).filter(|(x, y)| (**x > 0.0) == (**y > 0.5)).count();

    let mut assm_terms = Vec::new();
    let mut assm_hits = 0;
    let scored: Vec<&AssemblyTarget> = ex.assembly.iter().filter(|a| a.features.rows() > 0).collect();
    if !scored.is_empty() {
        let bits = scored[0].features.cols();
        let rows: Vec<f64> = scored.iter().flat_map(|a| a.features.data().iter().copied()).collect();
        let n: usize = scored.iter().map(|a| a.features.rows()).sum();
        let feats = net.tape.constant(Tensor::new(n, bits, rows)?);
        let scores = net.assembly_scores(feats, fused)?;
        let mut offset = 0;
        for a in &scored {
            let k = a.features.rows();
            if let Some(target) = a.target {
                let part = net.tape.slice(scores, offset, k, 0, 1)?;
                let row = net.tape.transpose(part)?;
                assm_terms.push(net.tape.softmax_cross_entropy(row, &[target])?);
                let vals: Vec<f64> = net.tape.value(row).data().to_vec();
                if argmax(&vals) == target {
                    assm_hits += 1;
                }
            }
            offset += k;
        }
    }
    let assm = if assm_terms.is_empty() {
        net.tape.constant(Tensor::scalar(0.0))
    } else {
        let all = net.tape.concat(&assm_terms, 0)?;
        net.tape.sum(all)?
    };
    let counts = [
        (label_hits, label_targets.len()),
        (topo_hits, topo_targets.len()),
        (assm_hits, ex.assembly.len()),
    ];
    Ok((topo, label, assm, counts))
}

/// Parameters, optimiser and schedule state of one training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub cfg: ModelConfig,
    pub schedule: TrainingSchedule,
    pub vocab: Vocabulary,
    pub params: ParamMap,
    pub adam: AdamState,
    pub lr: LrSchedule,
    pub rng: RngStreams,
    /// Completed epochs.
    pub epoch: u64,
    /// Completed optimiser steps; drives β.
    pub batches: u64,
}

impl Trainer {
    pub fn new(cfg: ModelConfig, schedule: TrainingSchedule, vocab: Vocabulary, seed: u64) -> Result<Trainer, ModelError> {
        let mut rng = RngStreams::new(seed);
        let params = init_params(&cfg, vocab.len(), &mut rng)?;
        let adam = AdamState::new(schedule.lr);
        let lr = LrSchedule { base: schedule.lr, decay: schedule.lr_decay };
        Ok(Trainer { cfg, schedule, vocab, params, adam, lr, rng, epoch: 0, batches: 0 })
    }

    pub fn beta(&self) -> f64 {
        self.schedule.beta(self.batches)
    }

    /// One pass over `examples` in a shuffled order: per mini-batch,
    /// forward, backward, global-norm clipping, an Adam step and a β step.
    pub fn train_epoch(&mut self, examples: &[Example], ligases: &[SeqInput]) -> Result<LossReport, ModelError> {
        if examples.is_empty() {
            return Err(ModelError::Input("no training examples".into()));
        }
        self.adam.lr = self.lr.at(self.epoch / self.schedule.lr_decay_every);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        order.shuffle(self.rng.stream("shuffle"));
        let mut tally = Tally::default();
        for (bi, chunk) in order.chunks(self.schedule.batch_size).enumerate() {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &examples[i]).collect();
            let noise: Vec<Noise> = batch.iter().map(|_| Noise::draw(&self.cfg, self.rng.stream("reparam"))).collect();
            let beta = self.beta();
            let mut tape = Tape::new();
            let bound = Bound::register(&self.params, &mut tape);
            let mut net = Net { tape: &mut tape, bound: &bound, cfg: &self.cfg };
            let (loss, batch_tally) = batch_loss(&mut net, &batch, ligases, Some(&noise), beta)?;
            if !tape.value(loss).item().is_finite() {
                return Err(ModelError::NonFinite { epoch: self.epoch + 1, batch: bi });
            }
            let grads = tape.backward(loss)?;
            let mut g = bound.gradients(&tape, &grads);
            clip_global_norm(g.values_mut(), self.schedule.clip_norm);
            self.adam.step(&mut self.params, &g)?;
            self.batches += 1;
            tally.add(&batch_tally);
        }
        self.epoch += 1;
        Ok(tally.report())
    }

    /// Teacher-forced losses and accuracies decoding from the posterior
    /// means, at the current β, without updating anything.
    pub fn evaluate(&self, examples: &[Example], ligases: &[SeqInput]) -> Result<LossReport, ModelError> {
        let mut tally = Tally::default();
        for ex in examples {
            let mut tape = Tape::new();
            let bound = Bound::register(&self.params, &mut tape);
            let mut net = Net { tape: &mut tape, bound: &bound, cfg: &self.cfg };
            let (_, t) = batch_loss(&mut net, &[ex], ligases, None, self.beta())?;
            tally.add(&t);
        }
        Ok(tally.report())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let schedule: String = self.schedule.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let meta = BTreeMap::from([
            ("model_config".to_string(), self.cfg.to_text()),
            ("schedule".to_string(), schedule),
            ("vocab".to_string(), self.vocab.to_tsv()),
        ]);
        Checkpoint {
            params: self.params.clone(),
            adam: self.adam.clone(),
            epoch: self.epoch,
            beta: self.beta(),
            batches: self.batches,
            seed: self.rng.seed(),
            rng: self.rng.states(),
            meta,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Trainer, ModelError> {
        let get = |k: &str| {
            ck.meta.get(k).ok_or_else(|| ModelError::Input(format!("checkpoint lacks {k}")))
        };
        let cfg = ModelConfig::from_text(get("model_config")?)?;
        let mut schedule = TrainingSchedule::default();
        for line in get("schedule")?.lines() {
            if let Some((k, v)) = line.split_once('=') {
                schedule.set(k.trim(), v.trim())?;
            }
        }
        let vocab = Vocabulary::from_tsv(get("vocab")?)?;
        let expected = param_shapes(&cfg, vocab.len());
        for (name, r, c, _) in &expected {
            match ck.params.get(name) {
                Some(t) if t.shape() == (*r, *c) => {}
                _ => return Err(ModelError::Input(format!("checkpoint parameter {name} missing or misshapen"))),
            }
        }
        Ok(Trainer {
            cfg,
            lr: LrSchedule { base: schedule.lr, decay: schedule.lr_decay },
            schedule,
            vocab,
            params: ck.params.clone(),
            adam: ck.adam.clone(),
            rng: RngStreams::restore(ck.seed, &ck.rng),
            epoch: ck.epoch,
            batches: ck.batches,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::jtree::decompose;

    #[test]
    fn plan_counts() {
        let m = parse_smiles("CC(C)Cc1ccccc1").unwrap();
        let t = decompose(&m).unwrap();
        let labels: Vec<usize> = (0..t.nodes.len()).collect();
        let plan = DecodePlan::new(&t, &labels);
        let n = t.nodes.len();
        assert_eq!(plan.labels.len(), n);
        assert_eq!(plan.topology.len(), 2 * (n - 1) + 1);
        assert_eq!(plan.topology.iter().filter(|(_, y)| *y == 1.0).count(), n - 1);
        assert_eq!(plan.inputs.len(), 1 + 2 * (n - 1));
    }

    #[test]
    fn benzene_plan_is_degenerate() {
        let m = parse_smiles("c1ccccc1").unwrap();
        let t = decompose(&m).unwrap();
        let plan = DecodePlan::new(&t, &[0]);
        assert_eq!(plan.labels, vec![(0, 0)]);
        assert_eq!(plan.topology, vec![(1, 0.0)]);
    }
}
