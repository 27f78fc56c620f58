use serde::{Deserialize, Serialize};

use super::{ChemError, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's bond-order sum. Aromatic bonds count one;
    /// the extra pi bond of an aromatic atom is accounted for separately.
    pub fn valence_units(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_units(units: u32) -> Option<BondOrder> {
        match units {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub index: usize,
    pub element: Element,
    pub formal_charge: i32,
    pub aromatic: bool,
    pub implicit_h: u32,
}

impl Atom {
    pub fn new(index: usize, element: Element) -> Atom {
        Atom {
            index,
            element,
            formal_charge: 0,
            aromatic: false,
            implicit_h: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub in_ring: bool,
    pub rotatable: bool,
    /// Dihedral angle in degrees, when a conformer supplied one.
    pub torsion: Option<f64>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond {
            a,
            b,
            order,
            in_ring: false,
            rotatable: false,
            torsion: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.a == atom || self.b == atom
    }
}

/// An attributed molecular graph. Construction validates the graph and
/// derives ring membership and rotatability for every bond.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source_text: String,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    pub fn new(
        mut atoms: Vec<Atom>,
        mut bonds: Vec<Bond>,
        source_text: impl Into<String>,
    ) -> Result<Molecule, ChemError> {
        let n = atoms.len();
        for (i, atom) in atoms.iter_mut().enumerate() {
            atom.index = i;
        }
        let mut adjacency = vec![Vec::new(); n];
        for (bi, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(ChemError::Graph(format!(
                    "bond {bi} references atom outside 0..{n}"
                )));
            }
            if bond.a == bond.b {
                return Err(ChemError::Graph(format!("bond {bi} is a self-loop on atom {}", bond.a)));
            }
            if adjacency[bond.a].iter().any(|(nb, _)| *nb == bond.b) {
                return Err(ChemError::Graph(format!(
                    "parallel bond between atoms {} and {}",
                    bond.a, bond.b
                )));
            }
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        let bridges = find_bridges(n, &adjacency, bonds.len());
        for (bi, bond) in bonds.iter_mut().enumerate() {
            bond.in_ring = !bridges[bi];
        }
        let heavy_degree: Vec<usize> = (0..n)
            .map(|i| {
                adjacency[i]
                    .iter()
                    .filter(|(nb, _)| atoms[*nb].element != Element::H)
                    .count()
            })
            .collect();
        for bond in bonds.iter_mut() {
            bond.rotatable = bond.order == BondOrder::Single
                && !bond.in_ring
                && atoms[bond.a].element != Element::H
                && atoms[bond.b].element != Element::H
                && heavy_degree[bond.a] >= 2
                && heavy_degree[bond.b] >= 2;
        }
        Ok(Molecule {
            atoms,
            bonds,
            source_text: source_text.into(),
            adjacency,
        })
    }

    pub fn empty() -> Molecule {
        Molecule {
            atoms: Vec::new(),
            bonds: Vec::new(),
            source_text: String::new(),
            adjacency: Vec::new(),
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor, bond index)` pairs in bond insertion order.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.adjacency[atom]
            .iter()
            .filter(|(nb, _)| self.atoms[*nb].element != Element::H)
            .count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|(nb, _)| *nb == b)
            .map(|(_, bi)| *bi)
    }

    /// Sum of bond valence units at an atom (aromatic bonds count one).
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|(_, bi)| self.bonds[*bi].order.valence_units())
            .sum()
    }

    pub fn aromatic_bond_count(&self, atom: usize) -> usize {
        self.adjacency[atom]
            .iter()
            .filter(|(_, bi)| self.bonds[*bi].order == BondOrder::Aromatic)
            .count()
    }

    /// Implicit hydrogens plus explicit hydrogen neighbours.
    pub fn total_h(&self, atom: usize) -> u32 {
        self.atoms[atom].implicit_h
            + self.adjacency[atom]
                .iter()
                .filter(|(nb, _)| self.atoms[*nb].element == Element::H)
                .count() as u32
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    /// Connected components as sorted atom lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.atoms.is_empty() || self.components().len() == 1
    }

    /// Induced subgraph over `keep` (in the given order) with atom attributes
    /// copied verbatim. Returns the new molecule and the old→new index map.
    pub fn induced(&self, keep: &[usize]) -> (Molecule, Vec<Option<usize>>) {
        let mut map = vec![None; self.atoms.len()];
        let mut atoms = Vec::with_capacity(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            map[old] = Some(new);
            atoms.push(self.atoms[old].clone());
        }
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .filter_map(|b| match (map[b.a], map[b.b]) {
                (Some(a), Some(bb)) => {
                    let mut nb = Bond::new(a, bb, b.order);
                    nb.torsion = b.torsion;
                    Some(nb)
                }
                _ => None,
            })
            .collect();
        let mol = Molecule::new(atoms, bonds, self.source_text.clone())
            .expect("induced subgraph of a valid molecule is valid");
        (mol, map)
    }

    /// Same graph with atoms reordered so that new atom `i` is old atom `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Molecule {
        assert_eq!(order.len(), self.atoms.len());
        let (mol, _) = self.induced(order);
        mol
    }

    pub fn with_torsions(&self, torsions: &[Option<f64>]) -> Molecule {
        let mut out = self.clone();
        for (bond, t) in out.bonds.iter_mut().zip(torsions) {
            bond.torsion = *t;
        }
        out
    }

    pub(crate) fn set_source_text(&mut self, text: impl Into<String>) {
        self.source_text = text.into();
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub(crate) fn set_bond_order(&mut self, bond: usize, order: BondOrder) {
        self.bonds[bond].order = order;
    }

    pub(crate) fn refresh_flags(self) -> Molecule {
        Molecule::new(self.atoms, self.bonds, self.source_text).expect("graph unchanged")
    }
}

/// Tarjan bridge detection, iterative.
fn find_bridges(n: usize, adjacency: &[Vec<(usize, usize)>], bond_count: usize) -> Vec<bool> {
    let mut bridge = vec![false; bond_count];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (node, parent bond, next neighbour position)
        let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(root, None, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(top) = stack.len().checked_sub(1) {
            let (u, pb, pos) = stack[top];
            if pos < adjacency[u].len() {
                let (v, bi) = adjacency[u][pos];
                stack[top].2 += 1;
                if Some(bi) == pb {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, Some(bi), 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let (Some(&(p, _, _)), Some(bi)) = (stack.last(), pb) {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        bridge[bi] = true;
                    }
                }
            }
        }
    }
    bridge
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, ring: bool) -> Molecule {
        let atoms = (0..n).map(|i| Atom::new(i, Element::C)).collect();
        let mut bonds: Vec<Bond> = (0..n - 1).map(|i| Bond::new(i, i + 1, BondOrder::Single)).collect();
        if ring {
            bonds.push(Bond::new(n - 1, 0, BondOrder::Single));
        }
        Molecule::new(atoms, bonds, "").unwrap()
    }

    #[test]
    fn ring_flags_from_bridges() {
        let m = chain(4, false);
        assert!(m.bonds().iter().all(|b| !b.in_ring));
        let m = chain(6, true);
        assert!(m.bonds().iter().all(|b| b.in_ring));
    }

    #[test]
    fn butane_has_one_rotatable_bond() {
        let m = chain(4, false);
        let rot: Vec<_> = m.bonds().iter().map(|b| b.rotatable).collect();
        assert_eq!(rot, vec![false, true, false]);
    }

    #[test]
    fn rejects_self_loop_and_parallel_edge() {
        let atoms = vec![Atom::new(0, Element::C), Atom::new(1, Element::C)];
        assert!(Molecule::new(atoms.clone(), vec![Bond::new(0, 0, BondOrder::Single)], "").is_err());
        assert!(Molecule::new(
            atoms.clone(),
            vec![Bond::new(0, 1, BondOrder::Single), Bond::new(1, 0, BondOrder::Double)],
            ""
        )
        .is_err());
        assert!(Molecule::new(atoms, vec![Bond::new(0, 2, BondOrder::Single)], "").is_err());
    }
}
