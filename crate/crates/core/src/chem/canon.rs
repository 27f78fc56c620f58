//! Canonical atom ranking and SMILES writing.
//!
//! Ranks start from local atom invariants and are refined by the sorted
//! ranks of each atom's neighbourhood until the partition is stable. Ties
//! left after refinement are broken one atom at a time (lowest tied class,
//! first member) followed by another round of refinement.

use std::collections::BTreeMap;

use super::kekule::{bare_aromatic_fill, bare_fill};
use super::{BondOrder, Molecule};

/// Canonical rank of every atom; a permutation of `0..n`.
pub fn canonical_ranks(m: &Molecule) -> Vec<usize> {
    let n = m.atom_count();
    if n == 0 {
        return Vec::new();
    }
    let initial: Vec<(u8, bool, usize, u32, i32, bool)> = (0..n)
        .map(|i| {
            let a = &m.atoms()[i];
            let in_ring = m.neighbors(i).iter().any(|(_, bi)| m.bonds()[*bi].in_ring);
            (
                a.element.atomic_number(),
                a.aromatic,
                m.degree(i),
                a.implicit_h,
                a.formal_charge,
                in_ring,
            )
        })
        .collect();
    let mut ranks = dense_ranks(&initial);
    ranks = refine(m, ranks);
    loop {
        let classes = distinct(&ranks);
        if classes == n {
            return ranks;
        }
        // lowest rank shared by more than one atom
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).unwrap();
        let chosen = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let keys: Vec<(usize, usize)> = (0..n)
            .map(|i| (ranks[i], usize::from(i != chosen)))
            .collect();
        ranks = refine(m, dense_ranks(&keys));
    }
}

fn refine(m: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    let n = ranks.len();
    let mut classes = distinct(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, usize)>)> = (0..n)
            .map(|i| {
                let mut nb: Vec<(usize, usize)> = m
                    .neighbors(i)
                    .iter()
                    .map(|(v, bi)| (ranks[*v], m.bonds()[*bi].order.index()))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = distinct(&next);
        ranks = next;
        if next_classes == classes {
            return ranks;
        }
        classes = next_classes;
    }
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap())
        .collect()
}

fn distinct(ranks: &[usize]) -> usize {
    let mut v = ranks.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Hydrogen count a SMILES reader would infer for this atom if it were
/// written without brackets.
pub(crate) fn implied_bare_h(m: &Molecule, atom: usize) -> Option<u32> {
    let a = &m.atoms()[atom];
    let sum = m.bond_order_sum(atom);
    if a.aromatic {
        Some(bare_aromatic_fill(a.element, sum).0)
    } else {
        bare_fill(a.element, sum)
    }
}

fn atom_token(m: &Molecule, i: usize) -> String {
    let a = &m.atoms()[i];
    let sym = if a.aromatic {
        a.element.symbol().to_ascii_lowercase()
    } else {
        a.element.symbol().to_string()
    };
    let bare_ok = a.element.organic_subset()
        && a.formal_charge == 0
        && implied_bare_h(m, i) == Some(a.implicit_h);
    if bare_ok {
        return sym;
    }
    let mut out = format!("[{sym}");
    match a.implicit_h {
        0 => {}
        1 => out.push('H'),
        h => out.push_str(&format!("H{h}")),
    }
    match a.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
    out
}

fn bond_token(m: &Molecule, bond: usize) -> &'static str {
    let b = &m.bonds()[bond];
    let both_aromatic = m.atoms()[b.a].aromatic && m.atoms()[b.b].aromatic;
    match b.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

/// Deterministic SMILES for `m`, invariant under atom relabeling.
pub fn write_canonical_smiles(m: &Molecule) -> String {
    let ranks = canonical_ranks(m);
    write_smiles_with_ranks(m, &ranks)
}

/// SMILES written by depth-first traversal guided by `ranks`: each
/// component starts at its lowest-ranked atom and branches are visited in
/// rank order.
pub fn write_smiles_with_ranks(m: &Molecule, ranks: &[usize]) -> String {
    let n = m.atom_count();
    if n == 0 {
        return String::new();
    }
    let mut comps = m.components();
    comps.sort_by_key(|c| c.iter().map(|&a| ranks[a]).min());
    let mut w = Writer {
        m,
        ranks,
        visited: vec![false; n],
        visit_order: vec![usize::MAX; n],
        counter: 0,
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
        closure_seen: vec![false; m.bond_count()],
        digits: BTreeMap::new(),
        out: String::new(),
    };
    let mut parts = Vec::new();
    for comp in comps {
        let start = *comp.iter().min_by_key(|&&a| ranks[a]).unwrap();
        w.discover(start, None);
        w.out.clear();
        w.emit(start);
        parts.push(std::mem::take(&mut w.out));
    }
    parts.join(".")
}

struct Writer<'a> {
    m: &'a Molecule,
    ranks: &'a [usize],
    visited: Vec<bool>,
    visit_order: Vec<usize>,
    counter: usize,
    children: Vec<Vec<(usize, usize)>>,
    closures: Vec<Vec<(usize, usize)>>,
    closure_seen: Vec<bool>,
    /// ring bond index -> open digit
    digits: BTreeMap<usize, u32>,
    out: String,
}

impl Writer<'_> {
    fn sorted_neighbors(&self, u: usize) -> Vec<(usize, usize)> {
        let mut nb = self.m.neighbors(u).to_vec();
        nb.sort_by_key(|(v, _)| self.ranks[*v]);
        nb
    }

    fn discover(&mut self, u: usize, parent_bond: Option<usize>) {
        self.visited[u] = true;
        self.visit_order[u] = self.counter;
        self.counter += 1;
        for (v, bi) in self.sorted_neighbors(u) {
            if Some(bi) == parent_bond {
                continue;
            }
            if self.visited[v] {
                if !self.closure_seen[bi] {
                    self.closure_seen[bi] = true;
                    self.closures[u].push((v, bi));
                    self.closures[v].push((u, bi));
                }
            } else {
                self.children[u].push((v, bi));
                self.discover(v, Some(bi));
            }
        }
    }

    fn emit(&mut self, u: usize) {
        self.out.push_str(&atom_token(self.m, u));
        let mut closures = self.closures[u].clone();
        closures.sort_by_key(|(v, _)| self.visit_order[*v]);
        let (closing, opening): (Vec<_>, Vec<_>) = closures
            .into_iter()
            .partition(|(v, _)| self.visit_order[*v] < self.visit_order[u]);
        for (_, bi) in closing {
            let d = self.digits.remove(&bi).expect("ring opened before closing");
            self.out.push_str(&digit_token(d));
        }
        for (_, bi) in opening {
            let used: Vec<u32> = self.digits.values().copied().collect();
            let d = (1..).find(|d| !used.contains(d)).unwrap();
            self.digits.insert(bi, d);
            self.out.push_str(bond_token(self.m, bi));
            self.out.push_str(&digit_token(d));
        }
        let children = self.children[u].clone();
        let last = children.len().saturating_sub(1);
        for (k, (v, bi)) in children.into_iter().enumerate() {
            let branch = k != last;
            if branch {
                self.out.push('(');
            }
            self.out.push_str(bond_token(self.m, bi));
            self.emit(v);
            if branch {
                self.out.push(')');
            }
        }
    }
}

fn digit_token(d: u32) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn canon(s: &str) -> String {
        write_canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn same_molecule_same_string() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
        assert_eq!(canon("c1ccccc1C"), canon("Cc1ccccc1"));
        assert_ne!(canon("CCO"), canon("CCC"));
    }

    #[test]
    fn deterministic_across_calls() {
        let m = parse_smiles("c1ccccc1").unwrap();
        let first = write_canonical_smiles(&m);
        for _ in 0..100 {
            assert_eq!(write_canonical_smiles(&m), first);
        }
    }

    #[test]
    fn brackets_where_needed() {
        assert_eq!(canon("[NH4+]"), "[NH4+]");
        assert!(canon("c1cc[nH]c1").contains("[nH]"));
        assert!(canon("CC(=O)[O-]").contains("[O-]"));
    }

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("CC(C)(C)c1ccc(O)cc1").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort_unstable();
        assert_eq!(r, (0..m.atom_count()).collect::<Vec<_>>());
    }

    #[test]
    fn biphenyl_link_written_explicitly() {
        let s = canon("c1ccccc1-c1ccccc1");
        assert!(s.contains('-'), "{s}");
        assert_eq!(canon(&s), s);
    }
}
