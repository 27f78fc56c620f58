//! Attaching clique fragments to a partially assembled molecule.
//!
//! Fragments carry no hydrogen counts except on atoms whose count cannot be
//! inferred (charged atoms, `[nH]`-style atoms); everything else is re-filled
//! from the bonds of the assembled graph, as a SMILES reader would.

use std::collections::BTreeMap;

use crate::chem::{
    bare_aromatic_fill, bare_fill, circular_fingerprint, implied_bare_h, write_canonical_smiles, Atom,
    Bond, BondOrder, ChemError, Element, Molecule,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragAtom {
    pub element: Element,
    pub charge: i32,
    pub aromatic: bool,
    /// Hydrogen count that must survive assembly; `None` means re-filled.
    pub fixed_h: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Frag {
    pub atoms: Vec<FragAtom>,
    pub bonds: Vec<(usize, usize, BondOrder)>,
}

impl Frag {
    pub fn from_molecule(m: &Molecule) -> Frag {
        let atoms = (0..m.atom_count())
            .map(|i| {
                let a = &m.atoms()[i];
                let fixed = a.formal_charge != 0
                    || !a.element.organic_subset()
                    || implied_bare_h(m, i) != Some(a.implicit_h);
                FragAtom {
                    element: a.element,
                    charge: a.formal_charge,
                    aromatic: a.aromatic,
                    fixed_h: fixed.then_some(a.implicit_h),
                }
            })
            .collect();
        let bonds = m.bonds().iter().map(|b| (b.a, b.b, b.order)).collect();
        Frag { atoms, bonds }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// A connected fragment with at least as many bonds as atoms has a cycle.
    pub fn is_ring(&self) -> bool {
        !self.atoms.is_empty() && self.bonds.len() >= self.atoms.len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.bonds
            .iter()
            .find(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a))
            .map(|(_, _, o)| *o)
    }

    /// Lower bound on the valence atom `i` will need once hydrogens are
    /// filled: bond orders (aromatic counting one), one more for the pi bond
    /// of an aromatic atom without an explicit double bond, plus fixed H.
    fn valence_needed(&self, i: usize) -> u32 {
        let mut sum = 0;
        let (mut aromatic, mut double) = (false, false);
        for &(a, b, o) in &self.bonds {
            if a == i || b == i {
                sum += o.valence_units();
                aromatic |= o == BondOrder::Aromatic;
                double |= o == BondOrder::Double;
            }
        }
        sum + u32::from(aromatic && !double) + self.atoms[i].fixed_h.unwrap_or(0)
    }

    pub fn valence_ok(&self, i: usize) -> bool {
        let a = &self.atoms[i];
        let need = self.valence_needed(i) as i32;
        a.element.allowed_valences(a.charge).any(|v| v >= need)
    }

    /// Concrete molecule with hydrogens filled on every non-fixed atom.
    pub fn to_molecule(&self) -> Result<Molecule, ChemError> {
        let mut sums = vec![0u32; self.atoms.len()];
        for &(a, b, o) in &self.bonds {
            sums[a] += o.valence_units();
            sums[b] += o.valence_units();
        }
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut a = Atom::new(i, f.element);
                a.formal_charge = f.charge;
                a.aromatic = f.aromatic;
                a.implicit_h = match f.fixed_h {
                    Some(h) => h,
                    None if f.aromatic => bare_aromatic_fill(f.element, sums[i]).0,
                    None => bare_fill(f.element, sums[i]).unwrap_or(0),
                };
                a
            })
            .collect();
        let bonds = self.bonds.iter().map(|&(a, b, o)| Bond::new(a, b, o)).collect();
        Molecule::new(atoms, bonds, "")
    }
}

/// Merges `child` into `partial`, identifying child atom `c` with partial
/// atom `p` for every `(c, p)` in `pairs`. Returns the merged fragment and
/// the partial index of every child atom.
pub fn merge(partial: &Frag, child: &Frag, pairs: &[(usize, usize)]) -> (Frag, Vec<usize>) {
    let mut out = partial.clone();
    let mut map = vec![usize::MAX; child.len()];
    for &(c, p) in pairs {
        map[c] = p;
        let target = &mut out.atoms[p];
        target.aromatic |= child.atoms[c].aromatic;
        if target.fixed_h.is_none() {
            target.fixed_h = child.atoms[c].fixed_h;
        }
    }
    for (c, slot) in map.iter_mut().enumerate() {
        if *slot == usize::MAX {
            *slot = out.atoms.len();
            out.atoms.push(child.atoms[c].clone());
        }
    }
    for &(a, b, o) in &child.bonds {
        let (x, y) = (map[a], map[b]);
        if out.bond_between(x, y).is_none() {
            out.bonds.push((x, y, o));
        }
    }
    (out, map)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub smiles: String,
    pub merged: Frag,
    pub child_map: Vec<usize>,
    /// Dense fingerprint of the merged graph, the scorer's input.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSet {
    /// Distinct outcomes sorted by canonical SMILES, at most the cap.
    pub candidates: Vec<Candidate>,
    /// Distinct outcomes dropped by the cap.
    pub overflow: usize,
}

impl CandidateSet {
    pub fn position(&self, smiles: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.smiles == smiles)
    }
}

pub(crate) fn candidate(merged: Frag, child_map: Vec<usize>, bits: usize) -> Option<Candidate> {
    let mol = merged.to_molecule().ok()?;
    let smiles = write_canonical_smiles(&mol);
    let features = circular_fingerprint(&mol, 2, bits).to_f64();
    Some(Candidate { smiles, merged, child_map, features })
}

fn compatible(partial: &Frag, p: usize, child: &Frag, c: usize) -> bool {
    let (x, y) = (&partial.atoms[p], &child.atoms[c]);
    x.element == y.element && x.charge == y.charge
}

/// Every distinct way of attaching `child` to the atoms `parent_atoms` of
/// `partial`: through one shared atom, or, when both cliques are rings,
/// through a shared bond of equal order. Attachments that overload a
/// valence are skipped. Outcomes are deduplicated by canonical SMILES,
/// sorted by it, and capped at `cap`; `extra` outcomes are always admitted
/// before the cap is applied.
pub fn enumerate_candidates(
    partial: &Frag,
    parent_atoms: &[usize],
    child: &Frag,
    ring_fusion: bool,
    bits: usize,
    cap: usize,
    extra: Option<Candidate>,
) -> CandidateSet {
    let mut seen: BTreeMap<String, Candidate> = BTreeMap::new();
    let mut try_pairs = |pairs: &[(usize, usize)]| {
        let (merged, map) = merge(partial, child, pairs);
        if pairs.iter().any(|&(_, p)| !merged.valence_ok(p)) {
            return;
        }
        if let Some(c) = candidate(merged, map, bits) {
            seen.entry(c.smiles.clone()).or_insert(c);
        }
    };
    for &p in parent_atoms {
        for c in 0..child.len() {
            if compatible(partial, p, child, c) {
                try_pairs(&[(c, p)]);
            }
        }
    }
    if ring_fusion {
        for &(c1, c2, order) in &child.bonds {
            for (i, &p1) in parent_atoms.iter().enumerate() {
                for &p2 in &parent_atoms[i + 1..] {
                    if partial.bond_between(p1, p2) != Some(order) {
                        continue;
                    }
                    for (a, b) in [(p1, p2), (p2, p1)] {
                        if compatible(partial, a, child, c1) && compatible(partial, b, child, c2) {
                            try_pairs(&[(c1, a), (c2, b)]);
                        }
                    }
                }
            }
        }
    }
    if let Some(c) = extra {
        seen.entry(c.smiles.clone()).or_insert(c);
    }
    let mut candidates: Vec<Candidate> = seen.into_values().collect();
    let overflow = candidates.len().saturating_sub(cap);
    candidates.truncate(cap);
    CandidateSet { candidates, overflow }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_fragment, parse_smiles};

    fn frag(s: &str) -> Frag {
        Frag::from_molecule(&parse_fragment(s).unwrap())
    }

    #[test]
    fn methyl_on_benzene_has_one_outcome() {
        let ring = frag("c1ccccc1");
        let set = enumerate_candidates(&ring, &[0, 1, 2, 3, 4, 5], &frag("CC"), false, 64, 100, None);
        assert_eq!(set.candidates.len(), 1);
        assert_eq!(set.candidates[0].smiles, "Cc1ccccc1");
    }

    #[test]
    fn second_substituent_gives_positional_isomers() {
        let ring = frag("c1ccccc1");
        let first = enumerate_candidates(&ring, &[0, 1, 2, 3, 4, 5], &frag("CC"), false, 64, 100, None);
        let partial = &first.candidates[0].merged;
        let ring_atoms: Vec<usize> = (0..6).collect();
        let second = enumerate_candidates(partial, &ring_atoms, &frag("CO"), false, 64, 100, None);
        // ortho, meta, para; the substituted carbon is full
        assert_eq!(second.candidates.len(), 3);
        for c in &second.candidates {
            parse_smiles(&c.smiles).unwrap();
        }
    }

    #[test]
    fn ring_fusion_makes_naphthalene() {
        let ring = frag("c1ccccc1");
        let set = enumerate_candidates(&ring, &[0, 1, 2, 3, 4, 5], &frag("c1ccccc1"), true, 64, 100, None);
        let smiles: Vec<&str> = set.candidates.iter().map(|c| c.smiles.as_str()).collect();
        let naph = write_canonical_smiles(&parse_smiles("c1ccc2ccccc2c1").unwrap());
        assert!(smiles.contains(&naph.as_str()), "{smiles:?}");
    }

    #[test]
    fn cap_counts_overflow() {
        let ring = frag("c1ccncc1");
        let all = enumerate_candidates(&ring, &[0, 1, 2, 3, 4, 5], &frag("CC"), false, 64, 100, None);
        assert!(all.candidates.len() > 1);
        let capped = enumerate_candidates(&ring, &[0, 1, 2, 3, 4, 5], &frag("CC"), false, 64, 1, None);
        assert_eq!(capped.candidates.len(), 1);
        assert_eq!(capped.overflow, all.candidates.len() - 1);
    }

    #[test]
    fn saturated_atom_rejects_attachment() {
        let f = frag("C(C)(C)(C)C");
        let set = enumerate_candidates(&f, &[0], &frag("CC"), false, 64, 100, None);
        assert!(set.candidates.is_empty());
    }

    #[test]
    fn charged_atoms_keep_hydrogens() {
        let f = frag("C[NH3+]");
        assert_eq!(f.atoms[1].fixed_h, Some(3));
        assert_eq!(f.atoms[0].fixed_h, None);
        assert_eq!(write_canonical_smiles(&f.to_molecule().unwrap()), "C[NH3+]");
    }
}
