//! Forward computations on a tape. Parameter names are `block.part`; the
//! block prefix groups tensors for auditing.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::chem::Molecule;
use crate::jtree::{JunctionTree, Vocabulary};
use crate::tensor::{Bound, ParamMap, Tape, Tensor, TensorError, Var};

use super::features::{DirectedEdges, GraphInput, TreeInput};
use super::{FusionMode, ModelConfig, ModelError, SeqEncoderMode, SeqInput, ATOM_FEATURES, BOND_FEATURES, AMINO_ACIDS, KMER_DIM};

/// `(name, rows, cols, is_bias)` for every parameter, in initialisation order.
pub(crate) fn param_shapes(cfg: &ModelConfig, vocab: usize) -> Vec<(String, usize, usize, bool)> {
    let (h, s, f, zm) = (cfg.hidden, cfg.seq_embed, cfg.fused, cfg.z_mol());
    let mut out: Vec<(&str, usize, usize, bool)> = vec![
        ("mpn.in.w", ATOM_FEATURES + BOND_FEATURES, h, false),
        ("mpn.msg.w", h, h, false),
        ("mpn.out.w", ATOM_FEATURES + h, h, false),
        ("mpn.out.b", 1, h, true),
        ("tree.emb", vocab, h, false),
        ("tree.in.w", h, h, false),
        ("tree.msg.w", h, h, false),
        ("tree.out.w", 2 * h, h, false),
        ("tree.out.b", 1, h, true),
        ("head.tree_mean.w", h, cfg.z_tree, false),
        ("head.tree_mean.b", 1, cfg.z_tree, true),
        ("head.tree_logvar.w", h, cfg.z_tree, false),
        ("head.tree_logvar.b", 1, cfg.z_tree, true),
        ("head.graph_mean.w", h, cfg.z_graph, false),
        ("head.graph_mean.b", 1, cfg.z_graph, true),
        ("head.graph_logvar.w", h, cfg.z_graph, false),
        ("head.graph_logvar.b", 1, cfg.z_graph, true),
    ];
    match cfg.seq_encoder {
        SeqEncoderMode::Kmer => out.extend([
            ("seq.h1.w", KMER_DIM, h, false),
            ("seq.h1.b", 1, h, true),
            ("seq.out.w", h, s, false),
            ("seq.out.b", 1, s, true),
        ]),
        SeqEncoderMode::OneHotRnn => out.extend([
            ("seq.h1.w", AMINO_ACIDS.len(), h, false),
            ("seq.h1.b", 1, h, true),
            ("seq.h2.w", AMINO_ACIDS.len(), h, false),
            ("seq.h2.b", 1, h, true),
            ("seq.fwd.u", h, h, false),
            ("seq.bwd.u", h, h, false),
            ("seq.out.w", 2 * h, s, false),
            ("seq.out.b", 1, s, true),
        ]),
        SeqEncoderMode::External => out.extend([
            ("seq.out.w", cfg.external_dim, s, false),
            ("seq.out.b", 1, s, true),
        ]),
    }
    if cfg.fusion == FusionMode::CrossAttention {
        out.extend([("attn.q.w", zm, s, false), ("attn.k.w", s, s, false), ("attn.v.w", s, s, false)]);
    }
    out.extend([
        ("fuse.w", zm + s, f, false),
        ("fuse.b", 1, f, true),
        ("dec.emb", vocab, h, false),
        ("dec.init.w", f, h, false),
        ("dec.init.b", 1, h, true),
        ("dec.gru.x.w", h + f, 3 * h, false),
        ("dec.gru.x.b", 1, 3 * h, true),
        ("dec.gru.h.w", h, 2 * h, false),
        ("dec.gru.n.w", h, h, false),
        ("dec.topo.w", h + f, 1, false),
        ("dec.topo.b", 1, 1, true),
        ("dec.label.w", h + f, vocab, false),
        ("dec.label.b", 1, vocab, true),
        ("dec.assm.w", cfg.assembly_bits, h, false),
        ("dec.assm.q", f, h, false),
    ]);
    out.into_iter().map(|(n, r, c, b)| (n.to_string(), r, c, b)).collect()
}

/// Tape variables of one fusion.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FusionVars {
    pub fused: Var,
    pub pre: Var,
    /// Heads x keys, rows summing to one.
    pub attention: Option<Var>,
}

pub(crate) struct Net<'a> {
    pub tape: &'a mut Tape,
    pub bound: &'a Bound,
    pub cfg: &'a ModelConfig,
}

impl Net<'_> {
    pub fn p(&self, name: &str) -> Result<Var, TensorError> {
        self.bound.var(name)
    }

    pub fn linear(&mut self, x: Var, prefix: &str) -> Result<Var, TensorError> {
        let w = self.p(&format!("{prefix}.w"))?;
        let b = self.p(&format!("{prefix}.b"))?;
        self.tape.linear(x, w, b)
    }

    pub fn mean_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let n = self.tape.value(x).rows();
        if n == 0 {
            return Err(TensorError::Invalid { op: "mean_rows", msg: "no rows".into() });
        }
        let s = self.tape.sum_rows(x)?;
        self.tape.scale(s, 1.0 / n as f64)
    }

    pub fn repeat_row(&mut self, x: Var, n: usize) -> Result<Var, TensorError> {
        self.tape.gather_rows(x, &vec![0; n])
    }

    /// Edge messages `m ← relu(base + (Σ incoming at source − reverse) W)`
    /// for `rounds` updates after `m = relu(base)`; returns the per-node sum
    /// of final incoming messages.
    fn propagate(
        &mut self,
        base: Var,
        topo: &DirectedEdges,
        nodes: usize,
        msg: &str,
        rounds: usize,
    ) -> Result<Var, TensorError> {
        let w = self.p(msg)?;
        let mut m = self.tape.relu(base)?;
        if topo.is_empty() {
            let h = self.tape.value(base).cols();
            return Ok(self.tape.constant(Tensor::zeros(nodes, h)));
        }
        for _ in 0..rounds {
            let incoming = self.tape.segment_sum(m, &topo.dst, nodes)?;
            let at_src = self.tape.gather_rows(incoming, &topo.src)?;
            let back = self.tape.gather_rows(m, &topo.rev)?;
            let nei = self.tape.sub(at_src, back)?;
            let upd = self.tape.matmul(nei, w)?;
            let pre = self.tape.add(base, upd)?;
            m = self.tape.relu(pre)?;
        }
        self.tape.segment_sum(m, &topo.dst, nodes)
    }

    fn heads(&mut self, pooled: Var, kind: &str) -> Result<(Var, Var), TensorError> {
        let mean = self.linear(pooled, &format!("head.{kind}_mean"))?;
        let logvar = self.linear(pooled, &format!("head.{kind}_logvar"))?;
        Ok((mean, logvar))
    }

    pub fn encode_graph(&mut self, g: &GraphInput) -> Result<(Var, Var), TensorError> {
        let n = g.atom_count();
        let edges = self.tape.constant(g.edges.clone());
        let w_in = self.p("mpn.in.w")?;
        let base = self.tape.matmul(edges, w_in)?;
        let incoming = self.propagate(base, &g.topology, n, "mpn.msg.w", self.cfg.mp_iters)?;
        let atoms = self.tape.constant(g.atoms.clone());
        let joined = self.tape.concat(&[atoms, incoming], 1)?;
        let pre = self.linear(joined, "mpn.out")?;
        let states = self.tape.relu(pre)?;
        let pooled = self.mean_rows(states)?;
        self.heads(pooled, "graph")
    }

    pub fn encode_tree(&mut self, t: &TreeInput) -> Result<(Var, Var), TensorError> {
        let n = t.labels.len();
        let table = self.p("tree.emb")?;
        let emb = self.tape.gather_rows(table, &t.labels)?;
        let src = self.tape.gather_rows(emb, &t.topology.src)?;
        let w_in = self.p("tree.in.w")?;
        let base = self.tape.matmul(src, w_in)?;
        let incoming = self.propagate(base, &t.topology, n, "tree.msg.w", self.cfg.tree_iters)?;
        let joined = self.tape.concat(&[emb, incoming], 1)?;
        let pre = self.linear(joined, "tree.out")?;
        let states = self.tape.relu(pre)?;
        let pooled = self.mean_rows(states)?;
        self.heads(pooled, "tree")
    }

    fn recurrent(&mut self, inputs: Var, u: &str, reverse: bool) -> Result<Vec<Var>, TensorError> {
        let (len, h) = self.tape.value(inputs).shape();
        let u = self.p(u)?;
        let mut state = self.tape.constant(Tensor::zeros(1, h));
        let mut out = vec![state; len];
        let order: Vec<usize> = if reverse { (0..len).rev().collect() } else { (0..len).collect() };
        for t in order {
            let x = self.tape.slice(inputs, t, 1, 0, h)?;
            let rec = self.tape.matmul(state, u)?;
            let pre = self.tape.add(x, rec)?;
            state = self.tape.tanh(pre)?;
            out[t] = state;
        }
        Ok(out)
    }

    /// Returns `(z_seq, values)`: the pooled embedding and the per-position
    /// rows it is the mean of (a single row outside the recurrent mode).
    pub fn encode_seq(&mut self, input: &SeqInput) -> Result<(Var, Var), TensorError> {
        match input {
            SeqInput::Kmer(counts) => {
                let x = self.tape.constant(counts.clone());
                let pre = self.linear(x, "seq.h1")?;
                let hidden = self.tape.relu(pre)?;
                let z = self.linear(hidden, "seq.out")?;
                Ok((z, z))
            }
            SeqInput::External(v) => {
                let x = self.tape.constant(v.clone());
                let z = self.linear(x, "seq.out")?;
                Ok((z, z))
            }
            SeqInput::Residues(onehot) => {
                let x = self.tape.constant(onehot.clone());
                let fwd_in = self.linear(x, "seq.h1")?;
                let bwd_in = self.linear(x, "seq.h2")?;
                let fwd = self.recurrent(fwd_in, "seq.fwd.u", false)?;
                let bwd = self.recurrent(bwd_in, "seq.bwd.u", true)?;
                let f = self.tape.concat(&fwd, 0)?;
                let b = self.tape.concat(&bwd, 0)?;
                let states = self.tape.concat(&[f, b], 1)?;
                let values = self.linear(states, "seq.out")?;
                let z = self.mean_rows(values)?;
                Ok((z, values))
            }
        }
    }

    pub fn fuse(&mut self, z_mol: Var, z_seq: Var, values: Var) -> Result<FusionVars, TensorError> {
        let (context, attention) = match self.cfg.fusion {
            FusionMode::Concat => (z_seq, None),
            FusionMode::CrossAttention => {
                let heads = self.cfg.heads;
                let s = self.cfg.seq_embed;
                let dh = s / heads;
                let keys_n = self.tape.value(values).rows();
                let (wq, wk, wv) = (self.p("attn.q.w")?, self.p("attn.k.w")?, self.p("attn.v.w")?);
                let q = self.tape.matmul(z_mol, wq)?;
                let k = self.tape.matmul(values, wk)?;
                let v = self.tape.matmul(values, wv)?;
                let mut outs = Vec::with_capacity(heads);
                let mut weights = Vec::with_capacity(heads);
                for hd in 0..heads {
                    let qh = self.tape.slice(q, 0, 1, hd * dh, dh)?;
                    let kh = self.tape.slice(k, 0, keys_n, hd * dh, dh)?;
                    let vh = self.tape.slice(v, 0, keys_n, hd * dh, dh)?;
                    let kt = self.tape.transpose(kh)?;
                    let raw = self.tape.matmul(qh, kt)?;
                    let scores = self.tape.scale(raw, 1.0 / (dh as f64).sqrt())?;
                    let a = self.tape.softmax(scores)?;
                    outs.push(self.tape.matmul(a, vh)?);
                    weights.push(a);
                }
                let ctx = self.tape.concat(&outs, 1)?;
                let w = self.tape.concat(&weights, 0)?;
                (ctx, Some(w))
            }
        };
        let joined = self.tape.concat(&[z_mol, context], 1)?;
        let pre = self.linear(joined, "fuse")?;
        let fused = self.tape.relu(pre)?;
        Ok(FusionVars { fused, pre, attention })
    }

    /// `z = μ + exp(logvar / 2) · ε`.
    pub fn sample(&mut self, mean: Var, logvar: Var, eps: &Tensor) -> Result<Var, TensorError> {
        let half = self.tape.scale(logvar, 0.5)?;
        let std = self.tape.exp(half)?;
        let e = self.tape.constant(eps.clone());
        let noise = self.tape.mul(std, e)?;
        self.tape.add(mean, noise)
    }

    /// `½ Σ (μ² + e^logvar − 1 − logvar)`.
    pub fn kl(&mut self, mean: Var, logvar: Var) -> Result<Var, TensorError> {
        let sq = self.tape.mul(mean, mean)?;
        let ev = self.tape.exp(logvar)?;
        let a = self.tape.add(sq, ev)?;
        let b = self.tape.sub(a, logvar)?;
        let c = self.tape.add_scalar(b, -1.0)?;
        let s = self.tape.sum(c)?;
        self.tape.scale(s, 0.5)
    }

    pub fn decoder_init(&mut self, fused: Var) -> Result<Var, TensorError> {
        let pre = self.linear(fused, "dec.init")?;
        self.tape.tanh(pre)
    }

    /// Input projections for a sequence of decoder input labels.
    pub fn gru_inputs(&mut self, labels: &[usize], fused: Var) -> Result<Var, TensorError> {
        let table = self.p("dec.emb")?;
        let emb = self.tape.gather_rows(table, labels)?;
        let z = self.repeat_row(fused, labels.len())?;
        let x = self.tape.concat(&[emb, z], 1)?;
        self.linear(x, "dec.gru.x")
    }

    /// One GRU update from a precomputed 1 x 3h input projection.
    pub fn gru_step(&mut self, gx: Var, h: Var) -> Result<Var, TensorError> {
        let hd = self.cfg.hidden;
        let uh = self.p("dec.gru.h.w")?;
        let un = self.p("dec.gru.n.w")?;
        let gh = self.tape.matmul(h, uh)?;
        let xz = self.tape.slice(gx, 0, 1, 0, hd)?;
        let xr = self.tape.slice(gx, 0, 1, hd, hd)?;
        let xn = self.tape.slice(gx, 0, 1, 2 * hd, hd)?;
        let hz = self.tape.slice(gh, 0, 1, 0, hd)?;
        let hr = self.tape.slice(gh, 0, 1, hd, hd)?;
        let zs = self.tape.add(xz, hz)?;
        let z = self.tape.sigmoid(zs)?;
        let rs = self.tape.add(xr, hr)?;
        let r = self.tape.sigmoid(rs)?;
        let rh = self.tape.mul(r, h)?;
        let nh = self.tape.matmul(rh, un)?;
        let ns = self.tape.add(xn, nh)?;
        let n = self.tape.tanh(ns)?;
        // h' = n + z ⊙ (h − n)
        let d = self.tape.sub(h, n)?;
        let zd = self.tape.mul(z, d)?;
        self.tape.add(n, zd)
    }

    /// Decoder readout rows `[state ‖ z_fused]`.
    pub fn readout(&mut self, states: Var, fused: Var) -> Result<Var, TensorError> {
        let n = self.tape.value(states).rows();
        let z = self.repeat_row(fused, n)?;
        self.tape.concat(&[states, z], 1)
    }

    /// Attachment scores `(features · W) · (z_fused · Q)ᵀ`, one row per candidate.
    pub fn assembly_scores(&mut self, features: Var, fused: Var) -> Result<Var, TensorError> {
        let w = self.p("dec.assm.w")?;
        let q = self.p("dec.assm.q")?;
        let emb = self.tape.matmul(features, w)?;
        let query = self.tape.matmul(fused, q)?;
        let qt = self.tape.transpose(query)?;
        self.tape.matmul(emb, qt)
    }
}

/// Posterior parameters of the two molecular latents.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeLatent {
    pub tree_mean: Tensor,
    pub tree_logvar: Tensor,
    pub graph_mean: Tensor,
    pub graph_logvar: Tensor,
}

/// Runs both molecular encoders. `torsions` holds one (sin, cos, flag) row per bond.
pub fn encode_molecule(
    params: &ParamMap,
    cfg: &ModelConfig,
    vocab: &Vocabulary,
    m: &Molecule,
    tree: &JunctionTree,
    torsions: &[[f64; 3]],
) -> Result<MoleculeLatent, ModelError> {
    let report = crate::jtree::verify_cover(m, tree);
    if let Some(v) = report.violation {
        return Err(ModelError::Input(format!("junction tree does not cover the molecule: {v}")));
    }
    let g = GraphInput::new(m, torsions)?;
    let t = TreeInput::new(tree, vocab)?;
    let mut tape = Tape::new();
    let bound = Bound::register(params, &mut tape);
    let mut net = Net { tape: &mut tape, bound: &bound, cfg };
    let (tm, tl) = net.encode_tree(&t)?;
    let (gm, gl) = net.encode_graph(&g)?;
    Ok(MoleculeLatent {
        tree_mean: tape.value(tm).clone(),
        tree_logvar: tape.value(tl).clone(),
        graph_mean: tape.value(gm).clone(),
        graph_logvar: tape.value(gl).clone(),
    })
}

/// The ligase embedding `z_seq`.
pub fn encode_ligase(params: &ParamMap, cfg: &ModelConfig, input: &SeqInput) -> Result<Tensor, ModelError> {
    let mut tape = Tape::new();
    let bound = Bound::register(params, &mut tape);
    let mut net = Net { tape: &mut tape, bound: &bound, cfg };
    let (z, _) = net.encode_seq(input)?;
    Ok(tape.value(z).clone())
}

/// Fusion output with its pre-activation and, for cross-attention, the
/// heads x positions attention weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Fusion {
    pub fused: Tensor,
    pub pre_activation: Tensor,
    pub attention: Option<Tensor>,
}

pub fn fuse_latent(params: &ParamMap, cfg: &ModelConfig, z_mol: &Tensor, input: &SeqInput) -> Result<Fusion, ModelError> {
    if z_mol.shape() != (1, cfg.z_mol()) {
        return Err(ModelError::Input(format!("z_mol shape {:?}, expected (1, {})", z_mol.shape(), cfg.z_mol())));
    }
    let mut tape = Tape::new();
    let bound = Bound::register(params, &mut tape);
    let mut net = Net { tape: &mut tape, bound: &bound, cfg };
    let (z_seq, values) = net.encode_seq(input)?;
    let zm = net.tape.constant(z_mol.clone());
    let f = net.fuse(zm, z_seq, values)?;
    Ok(Fusion {
        fused: tape.value(f.fused).clone(),
        pre_activation: tape.value(f.pre).clone(),
        attention: f.attention.map(|a| tape.value(a).clone()),
    })
}

fn check_finite(what: &str, t: &Tensor) -> Result<(), ModelError> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Input(format!("{what} is not finite")))
    }
}

/// `μ + exp(logvar / 2) · ε` with ε drawn from `rng`.
pub fn reparameterize(mean: &Tensor, logvar: &Tensor, rng: &mut impl Rng) -> Result<Tensor, ModelError> {
    check_finite("mean", mean)?;
    check_finite("logvar", logvar)?;
    if mean.shape() != logvar.shape() {
        return Err(ModelError::Input(format!("mean {:?} vs logvar {:?}", mean.shape(), logvar.shape())));
    }
    let eps: Vec<f64> = (0..mean.data().len()).map(|_| rng.sample(StandardNormal)).collect();
    let data = mean
        .data()
        .iter()
        .zip(logvar.data())
        .zip(eps)
        .map(|((m, lv), e)| m + (lv / 2.0).exp() * e)
        .collect();
    Ok(Tensor::new(mean.rows(), mean.cols(), data)?)
}

/// `½ Σ (μ² + e^logvar − 1 − logvar)`; never negative.
pub fn kl_divergence(mean: &Tensor, logvar: &Tensor) -> Result<f64, ModelError> {
    check_finite("mean", mean)?;
    check_finite("logvar", logvar)?;
    if mean.shape() != logvar.shape() {
        return Err(ModelError::Input(format!("mean {:?} vs logvar {:?}", mean.shape(), logvar.shape())));
    }
    Ok(0.5
        * mean
            .data()
            .iter()
            .zip(logvar.data())
            .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_closed_forms() {
        let z = Tensor::row(&[0.0, 0.0]);
        assert_eq!(kl_divergence(&z, &z).unwrap(), 0.0);
        assert_eq!(kl_divergence(&Tensor::row(&[1.0]), &Tensor::row(&[0.0])).unwrap(), 0.5);
        let v = kl_divergence(&Tensor::row(&[0.0]), &Tensor::row(&[4f64.ln()])).unwrap();
        assert!((v - 0.5 * (4.0 - 1.0 - 4f64.ln())).abs() < 1e-15);
        assert!((v - 0.8069).abs() < 1e-4);
        assert!(kl_divergence(&Tensor::row(&[f64::NAN]), &Tensor::row(&[0.0])).is_err());
    }
}
