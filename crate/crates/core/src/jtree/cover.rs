use std::fmt;

use crate::chem::Molecule;

use super::JunctionTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverViolation {
    AtomOutOfRange { node: usize, atom: usize },
    EdgeOutOfRange { edge: usize },
    RootOutOfRange { root: usize },
    EdgeCount { nodes: usize, edges: usize },
    Cycle { edge: usize },
    Uncovered { atom: usize },
    BondUncovered { bond: usize },
    /// Non-ring bond inside more than one clique.
    BondRepeated { bond: usize, cliques: usize },
    EmptyIntersection { edge: usize },
}

impl fmt::Display for CoverViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverViolation::AtomOutOfRange { node, atom } => {
                write!(f, "coverage: node {node} names atom {atom} outside the molecule")
            }
            CoverViolation::EdgeOutOfRange { edge } => write!(f, "edge {edge} names a missing node"),
            CoverViolation::RootOutOfRange { root } => write!(f, "root {root} is not a node"),
            CoverViolation::EdgeCount { nodes, edges } => {
                write!(f, "connectivity count: {edges} edges for {nodes} nodes")
            }
            CoverViolation::Cycle { edge } => write!(f, "cycle: edge {edge} closes a cycle"),
            CoverViolation::Uncovered { atom } => write!(f, "coverage: atom {atom} is in no clique"),
            CoverViolation::BondUncovered { bond } => {
                write!(f, "coverage: bond {bond} is in no clique")
            }
            CoverViolation::BondRepeated { bond, cliques } => {
                write!(f, "bond {bond} is in {cliques} cliques")
            }
            CoverViolation::EmptyIntersection { edge } => {
                write!(f, "edge {edge} joins cliques sharing no atom")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverReport {
    pub ok: bool,
    pub violation: Option<CoverViolation>,
}

impl CoverReport {
    fn fail(v: CoverViolation) -> CoverReport {
        CoverReport { ok: false, violation: Some(v) }
    }
}

/// Check the junction-tree invariants of `t` against `m`, stopping at the
/// first violation. Ring bonds may sit in several cliques (fused rings share
/// a bond); every other bond must sit in exactly one.
pub fn verify_cover(m: &Molecule, t: &JunctionTree) -> CoverReport {
    let n = m.atom_count();
    let k = t.nodes.len();
    for (i, node) in t.nodes.iter().enumerate() {
        if let Some(&atom) = node.atoms.iter().find(|a| **a >= n) {
            return CoverReport::fail(CoverViolation::AtomOutOfRange { node: i, atom });
        }
    }
    if k > 0 && t.root >= k {
        return CoverReport::fail(CoverViolation::RootOutOfRange { root: t.root });
    }
    if let Some(edge) = t.edges.iter().position(|&(u, v)| u >= k || v >= k || u == v) {
        return CoverReport::fail(CoverViolation::EdgeOutOfRange { edge });
    }
    let components = if n == 0 { 0 } else { m.components().len() };
    if t.edges.len() + components != k {
        return CoverReport::fail(CoverViolation::EdgeCount { nodes: k, edges: t.edges.len() });
    }
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, &(u, v)) in t.edges.iter().enumerate() {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return CoverReport::fail(CoverViolation::Cycle { edge: i });
        }
        parent[ru] = rv;
    }
    let mut covered = vec![false; n];
    for node in &t.nodes {
        for &a in &node.atoms {
            covered[a] = true;
        }
    }
    if let Some(atom) = covered.iter().position(|c| !c) {
        return CoverReport::fail(CoverViolation::Uncovered { atom });
    }
    for (bi, b) in m.bonds().iter().enumerate() {
        let holders = t.nodes.iter().filter(|c| c.contains(b.a) && c.contains(b.b)).count();
        if holders == 0 {
            return CoverReport::fail(CoverViolation::BondUncovered { bond: bi });
        }
        if holders > 1 && !b.in_ring {
            return CoverReport::fail(CoverViolation::BondRepeated { bond: bi, cliques: holders });
        }
    }
    for (i, &(u, v)) in t.edges.iter().enumerate() {
        if t.nodes[u].shared_with(&t.nodes[v]).is_empty() {
            return CoverReport::fail(CoverViolation::EmptyIntersection { edge: i });
        }
    }
    CoverReport { ok: true, violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use crate::jtree::decompose;

    #[test]
    fn ethanol_passes() {
        let m = parse_smiles("CCO").unwrap();
        assert!(verify_cover(&m, &decompose(&m).unwrap()).ok);
    }

    #[test]
    fn dropped_edge_fails_on_count() {
        let m = parse_smiles("CCO").unwrap();
        let mut t = decompose(&m).unwrap();
        t.edges.pop();
        let r = verify_cover(&m, &t);
        assert!(matches!(r.violation, Some(CoverViolation::EdgeCount { .. })));
        assert!(r.violation.unwrap().to_string().contains("connectivity"));
    }

    #[test]
    fn missing_atom_fails_on_coverage() {
        let m = parse_smiles("CCO").unwrap();
        let mut t = decompose(&m).unwrap();
        t.nodes[1].atoms = vec![1];
        let r = verify_cover(&m, &t);
        assert_eq!(r.violation, Some(CoverViolation::Uncovered { atom: 2 }));
        assert!(r.violation.unwrap().to_string().starts_with("coverage"));
    }

    #[test]
    fn extra_edge_is_a_cycle_or_count_error() {
        let m = parse_smiles("CC(C)C").unwrap();
        let mut t = decompose(&m).unwrap();
        t.edges.push((0, 2));
        assert!(!verify_cover(&m, &t).ok);
    }

    #[test]
    fn disjoint_edge_fails() {
        let m = parse_smiles("CCCC").unwrap();
        let mut t = decompose(&m).unwrap();
        // replace the edges with a path that joins non-overlapping cliques
        t.edges = vec![(0, 2), (1, 2)];
        assert!(matches!(
            verify_cover(&m, &t).violation,
            Some(CoverViolation::EmptyIntersection { edge: 0 })
        ));
    }
}
