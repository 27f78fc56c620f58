use crate::chem::Molecule;
use crate::jtree::{JunctionTree, Vocabulary};
use crate::tensor::Tensor;

use super::ModelError;

/// element one-hot, degree 0..=5, charge {−1, 0, +1}, aromatic, H 0..=4, in ring
pub const ATOM_FEATURES: usize = 11 + 6 + 3 + 1 + 5 + 1;
/// order one-hot, in ring, (sin θ, cos θ, has torsion)
pub const BOND_FEATURES: usize = 4 + 1 + 3;

pub fn atom_features(m: &Molecule, i: usize) -> Vec<f64> {
    let a = &m.atoms()[i];
    let mut f = vec![0.0; ATOM_FEATURES];
    f[a.element.index()] = 1.0;
    f[11 + m.degree(i).min(5)] = 1.0;
    f[17 + (a.formal_charge.clamp(-1, 1) + 1) as usize] = 1.0;
    f[20] = a.aromatic as u8 as f64;
    f[21 + (m.total_h(i) as usize).min(4)] = 1.0;
    f[26] = m.neighbors(i).iter().any(|(_, b)| m.bonds()[*b].in_ring) as u8 as f64;
    f
}

pub fn bond_features(m: &Molecule, bond: usize, torsion: [f64; 3]) -> Vec<f64> {
    let b = &m.bonds()[bond];
    let mut f = vec![0.0; BOND_FEATURES];
    f[b.order.index()] = 1.0;
    f[4] = b.in_ring as u8 as f64;
    f[5..8].copy_from_slice(&torsion);
    f
}

/// Directed-edge layout shared by the graph and tree encoders: edge `2k`
/// runs along undirected edge `k`, edge `2k + 1` runs back, so the reverse
/// of edge `e` is `e ^ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedEdges {
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub rev: Vec<usize>,
}

impl DirectedEdges {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> DirectedEdges {
        let (mut src, mut dst, mut rev) = (Vec::new(), Vec::new(), Vec::new());
        for (a, b) in pairs {
            let e = src.len();
            src.extend([a, b]);
            dst.extend([b, a]);
            rev.extend([e + 1, e]);
        }
        DirectedEdges { src, dst, rev }
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub atoms: Tensor,
    /// Per directed edge: source atom features then bond features.
    pub edges: Tensor,
    pub topology: DirectedEdges,
}

impl GraphInput {
    pub fn new(m: &Molecule, torsions: &[[f64; 3]]) -> Result<GraphInput, ModelError> {
        if torsions.len() != m.bond_count() {
            return Err(ModelError::Input(format!(
                "{} torsion rows for {} bonds",
                torsions.len(),
                m.bond_count()
            )));
        }
        let atom_rows: Vec<Vec<f64>> = (0..m.atom_count()).map(|i| atom_features(m, i)).collect();
        let topology = DirectedEdges::new(m.bonds().iter().map(|b| (b.a, b.b)));
        let mut edge_rows = Vec::with_capacity(topology.len());
        for (e, &src) in topology.src.iter().enumerate() {
            let mut row = atom_rows[src].clone();
            row.extend(bond_features(m, e / 2, torsions[e / 2]));
            edge_rows.push(row);
        }
        let atoms = Tensor::new(atom_rows.len(), ATOM_FEATURES, atom_rows.concat())?;
        let edges = Tensor::new(edge_rows.len(), ATOM_FEATURES + BOND_FEATURES, edge_rows.concat())?;
        Ok(GraphInput { atoms, edges, topology })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeInput {
    pub labels: Vec<usize>,
    pub topology: DirectedEdges,
}

impl TreeInput {
    pub fn new(t: &JunctionTree, vocab: &Vocabulary) -> Result<TreeInput, ModelError> {
        let labels = t
            .nodes
            .iter()
            .map(|c| vocab.index_of(&c.label).ok_or_else(|| ModelError::VocabMiss(c.label.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TreeInput { labels, topology: DirectedEdges::new(t.edges.iter().copied()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn feature_widths() {
        let m = parse_smiles("C[N+](C)(C)Cc1ccccc1").unwrap();
        for i in 0..m.atom_count() {
            let f = atom_features(&m, i);
            assert_eq!(f.len(), ATOM_FEATURES);
            // exactly one hot per categorical group
            assert_eq!(f[..11].iter().sum::<f64>(), 1.0);
            assert_eq!(f[11..17].iter().sum::<f64>(), 1.0);
            assert_eq!(f[17..20].iter().sum::<f64>(), 1.0);
            assert_eq!(f[21..26].iter().sum::<f64>(), 1.0);
        }
        let g = GraphInput::new(&m, &vec![[0.0; 3]; m.bond_count()]).unwrap();
        assert_eq!(g.edges.shape(), (2 * m.bond_count(), ATOM_FEATURES + BOND_FEATURES));
        assert!(GraphInput::new(&m, &[]).is_err());
    }

    #[test]
    fn reverse_edges_pair_up() {
        let d = DirectedEdges::new([(0, 1), (1, 2)]);
        for e in 0..d.len() {
            assert_eq!(d.rev[d.rev[e]], e);
            assert_eq!(d.src[e], d.dst[d.rev[e]]);
        }
    }
}
