use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chem::{check_valence, parse_fragment, parse_smiles, write_canonical_smiles};
use crate::jtree::Vocabulary;
use crate::tensor::{Bound, ParamMap, RngStreams, Tape, Tensor};

use super::assembly::{enumerate_candidates, Frag};
use super::network::Net;
use super::{ModelConfig, ModelError, SeqInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleStatus {
    Ok,
    /// No label among the vocabulary could be attached at some expansion.
    NoValidAttachment,
    /// The assembled graph did not survive re-parsing.
    SanitizeFailed,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::NoValidAttachment => "no_valid_attachment",
            SampleStatus::SanitizeFailed => "sanitize_failed",
        }
    }

    pub const ALL: [SampleStatus; 3] =
        [SampleStatus::Ok, SampleStatus::NoValidAttachment, SampleStatus::SanitizeFailed];
}

impl fmt::Display for SampleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SampleStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SampleStatus::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown sample status {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSample {
    pub index: usize,
    /// Canonical SMILES; empty unless the status is `Ok`.
    pub smiles: String,
    pub status: SampleStatus,
    /// Tree nodes decoded before finishing or failing.
    pub nodes: usize,
}

fn order_desc(logits: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..logits.len()).collect();
    // ties keep vocabulary order
    idx.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    idx
}

struct Open {
    label: usize,
    /// Positions of this clique's atoms in the partial molecule.
    atoms: Vec<usize>,
    ring: bool,
}

/// Draws `n` molecules for one ligase: z_mol ~ N(0, I) from the "sample"
/// stream, fused with the ligase embedding, then greedy depth-first tree
/// decoding with greedy, valence-checked attachment at every expansion.
pub fn generate(
    params: &ParamMap,
    cfg: &ModelConfig,
    vocab: &Vocabulary,
    ligase: &SeqInput,
    n: usize,
    rngs: &mut RngStreams,
) -> Result<Vec<GeneratedSample>, ModelError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if vocab.is_empty() {
        return Err(ModelError::Config("empty vocabulary".into()));
    }
    let frags: Vec<Option<Frag>> = (0..vocab.len())
        .map(|i| parse_fragment(vocab.label(i)).ok().map(|m| Frag::from_molecule(&m)))
        .collect();

    let (z_seq, values) = {
        let mut tape = Tape::new();
        let bound = Bound::register(params, &mut tape);
        let mut net = Net { tape: &mut tape, bound: &bound, cfg };
        let (z, v) = net.encode_seq(ligase)?;
        (tape.value(z).clone(), tape.value(v).clone())
    };
    let decoder: ParamMap = params
        .iter()
        .filter(|(k, _)| k.starts_with("dec.") || k.starts_with("fuse.") || k.starts_with("attn."))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    let mut out = Vec::with_capacity(n);
    for index in 0..n {
        let rng = rngs.stream("sample");
        let z: Vec<f64> = (0..cfg.z_mol()).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let mut tape = Tape::new();
        let bound = Bound::register(&decoder, &mut tape);
        let mut net = Net { tape: &mut tape, bound: &bound, cfg };
        let (smiles, status, nodes) = decode_one(&mut net, &Tensor::row(&z), &z_seq, &values, &frags)?;
        out.push(GeneratedSample { index, smiles, status, nodes });
    }
    Ok(out)
}

fn decode_one(
    net: &mut Net<'_>,
    z_mol: &Tensor,
    z_seq: &Tensor,
    values: &Tensor,
    frags: &[Option<Frag>],
) -> Result<(String, SampleStatus, usize), ModelError> {
    let cfg = net.cfg;
    let zm = net.tape.constant(z_mol.clone());
    let zs = net.tape.constant(z_seq.clone());
    let vs = net.tape.constant(values.clone());
    let fused = net.fuse(zm, zs, vs)?.fused;
    let mut h = net.decoder_init(fused)?;

    let logits_at = |net: &mut Net<'_>, h, head: &str| -> Result<Vec<f64>, ModelError> {
        let r = net.readout(h, fused)?;
        let l = net.linear(r, head)?;
        Ok(net.tape.value(l).data().to_vec())
    };

    let root_order = order_desc(&logits_at(net, h, "dec.label")?);
    let Some(root) = root_order.into_iter().find(|&l| frags[l].is_some()) else {
        return Ok((String::new(), SampleStatus::SanitizeFailed, 0));
    };
    let mut partial = frags[root].clone().expect("checked");
    let mut stack = vec![Open { label: root, atoms: (0..partial.len()).collect(), ring: partial.is_ring() }];
    let mut nodes = 1;
    let step = |net: &mut Net<'_>, h, label: usize| -> Result<_, ModelError> {
        let gx = net.gru_inputs(&[label], fused)?;
        Ok(net.gru_step(gx, h)?)
    };
    h = step(net, h, root)?;

    while let Some(cur) = stack.last() {
        let expand = nodes < cfg.max_decode_nodes && logits_at(net, h, "dec.topo")?[0] > 0.0;
        if !expand {
            stack.pop();
            match stack.last() {
                Some(parent) => h = step(net, h, parent.label)?,
                None => break,
            }
            continue;
        }
        let mut chosen = None;
        for label in order_desc(&logits_at(net, h, "dec.label")?) {
            let Some(child) = &frags[label] else { continue };
            let set = enumerate_candidates(
                &partial,
                &cur.atoms,
                child,
                cur.ring && child.is_ring(),
                cfg.assembly_bits,
                cfg.max_candidates,
                None,
            );
            if set.candidates.is_empty() {
                continue;
            }
            let rows: Vec<f64> = set.candidates.iter().flat_map(|c| c.features.iter().copied()).collect();
            let feats = net.tape.constant(Tensor::new(set.candidates.len(), cfg.assembly_bits, rows)?);
            let scores = net.assembly_scores(feats, fused)?;
            let best = order_desc(net.tape.value(scores).data())[0];
            chosen = Some((label, child.is_ring(), set.candidates.into_iter().nth(best).expect("in range")));
            break;
        }
        let Some((label, ring, cand)) = chosen else {
            return Ok((String::new(), SampleStatus::NoValidAttachment, nodes));
        };
        partial = cand.merged;
        stack.push(Open { label, atoms: cand.child_map, ring });
        nodes += 1;
        h = step(net, h, label)?;
    }

    let status_of = || -> Option<String> {
        let m = partial.to_molecule().ok()?;
        let smiles = write_canonical_smiles(&m);
        let again = parse_smiles(&smiles).ok()?;
        if !check_valence(&again).ok {
            return None;
        }
        Some(write_canonical_smiles(&again))
    };
    Ok(match status_of() {
        Some(s) => (s, SampleStatus::Ok, nodes),
        None => (String::new(), SampleStatus::SanitizeFailed, nodes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_names_round_trip() {
        for s in SampleStatus::ALL {
            assert_eq!(s.as_str().parse::<SampleStatus>().unwrap(), s);
        }
    }

    #[test]
    fn descending_order_is_stable() {
        assert_eq!(order_desc(&[0.5, 2.0, 0.5, -1.0]), vec![1, 0, 2, 3]);
    }
}
