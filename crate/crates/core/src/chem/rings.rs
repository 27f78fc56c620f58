//! Smallest set of smallest rings.
//!
//! Candidate cycles come from Horton's construction (shortest path from a
//! root to each end of an edge); a GF(2) elimination over bond-incidence
//! vectors keeps the shortest linearly independent subset.

use std::collections::{HashSet, VecDeque};

use super::Molecule;

/// Rings of `m`, each as an ordered cycle of atom indices.
///
/// The count always equals `bonds - atoms + components`. Rings are sorted by
/// size, then by their sorted member lists.
pub fn perceive_rings(m: &Molecule) -> Vec<Vec<usize>> {
    let n = m.atom_count();
    let e = m.bond_count();
    if n == 0 {
        return Vec::new();
    }
    let target = e + m.components().len() - n;
    if target == 0 {
        return Vec::new();
    }

    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = m
                .neighbors(i)
                .iter()
                .filter(|(_, bi)| m.bonds()[*bi].in_ring)
                .map(|(nb, _)| *nb)
                .collect();
            v.sort_unstable();
            v
        })
        .collect();

    let ring_atoms: Vec<usize> = (0..n).filter(|&i| !adj[i].is_empty()).collect();
    let ring_bonds: Vec<usize> = (0..e).filter(|&bi| m.bonds()[bi].in_ring).collect();

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let words = e.div_ceil(64);

    for &root in &ring_atoms {
        let parent = bfs_parents(root, &adj, n);
        let path_to = |t: usize| -> Option<Vec<usize>> {
            let mut path = vec![t];
            let mut cur = t;
            while cur != root {
                cur = parent[cur]?;
                path.push(cur);
            }
            path.reverse();
            Some(path)
        };
        for &bi in &ring_bonds {
            let bond = &m.bonds()[bi];
            let (Some(px), Some(py)) = (path_to(bond.a), path_to(bond.b)) else {
                continue;
            };
            let sx: HashSet<usize> = px.iter().copied().collect();
            if py.iter().skip(1).any(|v| sx.contains(v)) {
                continue;
            }
            let mut cycle = px.clone();
            cycle.extend(py.iter().skip(1).rev());
            if cycle.len() < 3 {
                continue;
            }
            let mut bits = vec![0u64; words];
            let mut ok = true;
            for w in 0..cycle.len() {
                let a = cycle[w];
                let b = cycle[(w + 1) % cycle.len()];
                match m.bond_between(a, b) {
                    Some(k) => bits[k / 64] |= 1 << (k % 64),
                    None => ok = false,
                }
            }
            if !ok || !seen.insert(bits.clone()) {
                continue;
            }
            let mut sorted = cycle.clone();
            sorted.sort_unstable();
            candidates.push(Candidate { cycle, sorted, bits });
        }
    }
    candidates.sort_by(|a, b| {
        a.cycle
            .len()
            .cmp(&b.cycle.len())
            .then_with(|| a.sorted.cmp(&b.sorted))
    });

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for cand in candidates {
        let mut v = cand.bits.clone();
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (x, y) in v.iter_mut().zip(row) {
                    *x ^= y;
                }
            }
        }
        if let Some(pivot) = first_bit(&v) {
            // keep the basis fully reduced on the new pivot
            for (_, row) in basis.iter_mut() {
                if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    for (x, y) in row.iter_mut().zip(&v) {
                        *x ^= y;
                    }
                }
            }
            basis.push((pivot, v));
            rings.push(cand);
            if rings.len() == target {
                break;
            }
        }
    }
    rings.sort_by(|a, b| {
        a.cycle
            .len()
            .cmp(&b.cycle.len())
            .then_with(|| a.sorted.cmp(&b.sorted))
    });
    rings.into_iter().map(|c| c.cycle).collect()
}

struct Candidate {
    cycle: Vec<usize>,
    sorted: Vec<usize>,
    bits: Vec<u64>,
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn bfs_parents(root: usize, adj: &[Vec<usize>], n: usize) -> Vec<Option<usize>> {
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    parent
}

/// Bond indices along a ring, in cycle order.
pub fn ring_bonds(m: &Molecule, ring: &[usize]) -> Vec<usize> {
    (0..ring.len())
        .filter_map(|i| m.bond_between(ring[i], ring[(i + 1) % ring.len()]))
        .collect()
}
