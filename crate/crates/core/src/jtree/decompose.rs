use serde::{Deserialize, Serialize};

use crate::chem::{
    bare_aromatic_fill, bare_fill, implied_bare_h, perceive_rings, write_canonical_smiles, Bond,
    Molecule,
};

use super::TreeError;

/// Weight given to tree-candidate edges touching a singleton clique.
const SINGLETON_WEIGHT: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clique {
    /// Sorted, unique atom indices of the parent molecule.
    pub atoms: Vec<usize>,
    pub label: String,
    pub is_ring: bool,
}

impl Clique {
    pub fn is_singleton(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }

    pub fn shared_with(&self, other: &Clique) -> Vec<usize> {
        self.atoms.iter().copied().filter(|a| other.contains(*a)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionTree {
    pub nodes: Vec<Clique>,
    /// Tree edges as `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
}

impl JunctionTree {
    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| {
                if u == node {
                    Some(v)
                } else if v == node {
                    Some(u)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn shared_atoms(&self, u: usize, v: usize) -> Vec<usize> {
        self.nodes[u].shared_with(&self.nodes[v])
    }

    /// Children of every node when the tree hangs from `root`, each list
    /// ordered by the child's smallest atom index.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut children = vec![Vec::new(); n];
        if n == 0 {
            return children;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(u) = stack.pop() {
            let mut kids: Vec<usize> = self.neighbors(u).into_iter().filter(|v| !seen[*v]).collect();
            kids.sort_by_key(|&v| (self.nodes[v].atoms[0], v));
            for &v in &kids {
                seen[v] = true;
                stack.push(v);
            }
            children[u] = kids;
        }
        children
    }
}

/// Molecule induced by `atoms` as a standalone fragment.
///
/// Atoms that needed brackets in the parent keep their charge and hydrogen
/// count; every other atom gets the hydrogens a bare atom would carry in the
/// fragment. Outside ring cliques the aromatic flags are dropped, so the
/// methyl-aryl bond of toluene reads `CC`.
pub fn fragment_molecule(m: &Molecule, atoms: &[usize], keep_aromatic: bool) -> Molecule {
    let bracketed: Vec<bool> = atoms
        .iter()
        .map(|&a| {
            let atom = &m.atoms()[a];
            atom.formal_charge != 0
                || !atom.element.organic_subset()
                || implied_bare_h(m, a) != Some(atom.implicit_h)
        })
        .collect();
    let (mut frag, _) = m.induced(atoms);
    if !keep_aromatic {
        let bonds: Vec<Bond> = frag
            .bonds()
            .iter()
            .map(|b| {
                let order = match b.order {
                    crate::chem::BondOrder::Aromatic => crate::chem::BondOrder::Single,
                    o => o,
                };
                Bond::new(b.a, b.b, order)
            })
            .collect();
        let mut plain_atoms = frag.atoms().to_vec();
        for a in plain_atoms.iter_mut() {
            a.aromatic = false;
        }
        frag = Molecule::new(plain_atoms, bonds, "").expect("same graph");
    }
    let sums: Vec<u32> = (0..frag.atom_count()).map(|i| frag.bond_order_sum(i)).collect();
    let mut out = frag.clone();
    for (i, atom) in out.atoms_mut().iter_mut().enumerate() {
        if bracketed[i] {
            continue;
        }
        atom.implicit_h = if atom.aromatic {
            bare_aromatic_fill(atom.element, sums[i]).0
        } else {
            bare_fill(atom.element, sums[i]).unwrap_or(0)
        };
    }
    out
}

pub fn clique_label(m: &Molecule, atoms: &[usize], is_ring: bool) -> String {
    write_canonical_smiles(&fragment_molecule(m, atoms, is_ring))
}

/// Clique decomposition and maximum spanning tree over the clique graph.
pub fn decompose(m: &Molecule) -> Result<JunctionTree, TreeError> {
    if m.is_empty() {
        return Err(TreeError::Empty);
    }
    let comps = m.components().len();
    if comps > 1 {
        return Err(TreeError::MultiFragment { components: comps });
    }

    let mut sets: Vec<(Vec<usize>, bool)> = m
        .bonds()
        .iter()
        .filter(|b| !b.in_ring)
        .map(|b| (vec![b.a.min(b.b), b.a.max(b.b)], false))
        .collect();

    let mut rings: Vec<Vec<usize>> = perceive_rings(m)
        .into_iter()
        .map(|mut r| {
            r.sort_unstable();
            r
        })
        .collect();
    // merge rings sharing more than two atoms until none do
    loop {
        let mut merged = false;
        'outer: for i in 0..rings.len() {
            for j in i + 1..rings.len() {
                let shared = rings[i].iter().filter(|a| rings[j].binary_search(a).is_ok()).count();
                if shared > 2 {
                    let other = rings.remove(j);
                    rings[i].extend(other);
                    rings[i].sort_unstable();
                    rings[i].dedup();
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    sets.extend(rings.into_iter().map(|r| (r, true)));

    let n = m.atom_count();
    let mut membership = vec![0usize; n];
    for (s, _) in &sets {
        for &a in s {
            membership[a] += 1;
        }
    }
    for a in 0..n {
        if membership[a] >= 3 || membership[a] == 0 {
            sets.push((vec![a], false));
        }
    }
    sets.sort();

    let nodes: Vec<Clique> = sets
        .into_iter()
        .map(|(atoms, is_ring)| Clique {
            label: clique_label(m, &atoms, is_ring),
            atoms,
            is_ring,
        })
        .collect();

    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for u in 0..nodes.len() {
        for v in u + 1..nodes.len() {
            let shared = nodes[u].shared_with(&nodes[v]).len();
            if shared == 0 {
                continue;
            }
            let w = if nodes[u].is_singleton() || nodes[v].is_singleton() {
                SINGLETON_WEIGHT
            } else {
                shared
            };
            candidates.push((w, u, v));
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut edges = Vec::new();
    for (_, u, v) in candidates {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            edges.push((u, v));
        }
    }
    edges.sort_unstable();
    let root = nodes.iter().position(|c| c.contains(0)).unwrap_or(0);
    Ok(JunctionTree { nodes, edges, root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_fragment, parse_smiles};

    fn tree(s: &str) -> JunctionTree {
        decompose(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn ethanol() {
        let t = tree("CCO");
        let atoms: Vec<_> = t.nodes.iter().map(|c| c.atoms.clone()).collect();
        assert_eq!(atoms, vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(t.edges, vec![(0, 1)]);
        assert_eq!(t.shared_atoms(0, 1), vec![1]);
        assert_eq!(t.nodes[0].label, "CC");
        assert_eq!(t.nodes[1].label, "CO");
    }

    #[test]
    fn benzene() {
        let t = tree("c1ccccc1");
        assert_eq!(t.nodes.len(), 1);
        assert!(t.edges.is_empty());
        assert_eq!(t.nodes[0].label, "c1ccccc1");
    }

    #[test]
    fn biphenyl_is_a_path() {
        let t = tree("c1ccccc1-c2ccccc2");
        assert_eq!(t.nodes.len(), 3);
        assert_eq!(t.edges.len(), 2);
        let bond = t.nodes.iter().position(|c| !c.is_ring).unwrap();
        assert_eq!(t.neighbors(bond).len(), 2);
        let rings: Vec<_> = t.nodes.iter().filter(|c| c.is_ring).collect();
        assert_eq!(rings[0].label, rings[1].label);
    }

    #[test]
    fn norbornane_rings_merge() {
        let t = tree("C1CC2CCC1C2");
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].atoms.len(), 7);
    }

    #[test]
    fn naphthalene_keeps_two_rings() {
        let t = tree("c1ccc2ccccc2c1");
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.shared_atoms(0, 1).len(), 2);
    }

    #[test]
    fn branch_point_gets_singleton() {
        // isobutane: the central carbon sits in three bond cliques
        let t = tree("CC(C)C");
        assert_eq!(t.nodes.len(), 4);
        let single = t.nodes.iter().position(|c| c.is_singleton()).unwrap();
        assert_eq!(t.neighbors(single).len(), 3);
    }

    #[test]
    fn single_atom() {
        let t = tree("C");
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].label, "C");
    }

    #[test]
    fn rejects_fragments() {
        let m = parse_smiles("CC.O").unwrap();
        assert!(matches!(decompose(&m), Err(TreeError::MultiFragment { components: 2 })));
    }

    #[test]
    fn labels_reparse_to_themselves() {
        for s in ["Cc1ccccc1", "c1cc[nH]c1CC", "C[N+](=O)[O-]", "O=C1CCCN1", "c1ccc2ccccc2c1"] {
            for c in tree(s).nodes {
                let again = write_canonical_smiles(&parse_fragment(&c.label).unwrap());
                assert_eq!(again, c.label, "{s}");
            }
        }
        let t = tree("Cc1ccccc1");
        assert!(t.nodes.iter().any(|c| c.label == "CC"));
        assert!(t.nodes.iter().any(|c| c.label == "c1ccccc1"));
        assert!(tree("c1cc[nH]c1").nodes[0].label.contains("[nH]"));
    }

    #[test]
    fn children_ordered_by_smallest_atom() {
        let t = tree("CC(C)C");
        let kids = t.children();
        let total: usize = kids.iter().map(|k| k.len()).sum();
        assert_eq!(total, t.nodes.len() - 1);
    }
}
