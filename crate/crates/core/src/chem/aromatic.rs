//! Hückel aromaticity over the smallest set of smallest rings.
//!
//! Each ring atom contributes a fixed number of pi electrons read off the
//! localised structure: one for a double bond that lies in a ring, zero for
//! an exocyclic double bond, two for a lone pair (neutral N/P with three
//! connections, neutral O/S with two, carbanions), zero for carbocations
//! and trivalent boron. Any other atom (sp3 carbon, triple bonds) makes the
//! ring non-aromatic. A ring is aromatic iff its total is 4n+2.

use super::rings::{perceive_rings, ring_bonds};
use super::{BondOrder, Element, Molecule};

pub(crate) fn pi_electrons(m: &Molecule, atom: usize) -> Option<u32> {
    let a = &m.atoms()[atom];
    let mut ring_double = 0;
    let mut exo_double = 0;
    for &(_, bi) in m.neighbors(atom) {
        let bond = &m.bonds()[bi];
        match bond.order {
            BondOrder::Triple | BondOrder::Aromatic => return None,
            BondOrder::Double if bond.in_ring => ring_double += 1,
            BondOrder::Double => exo_double += 1,
            BondOrder::Single => {}
        }
    }
    match (ring_double, exo_double) {
        (1, 0) => return Some(1),
        (0, 1) => return Some(0),
        (0, 0) => {}
        _ => return None,
    }
    let connections = m.degree(atom) as u32 + a.implicit_h;
    match (a.element, a.formal_charge) {
        (Element::C, -1) => Some(2),
        (Element::C, 1) => Some(0),
        (Element::N | Element::P, 0) if connections == 3 => Some(2),
        (Element::N | Element::P, -1) if connections == 2 => Some(2),
        (Element::O | Element::S, 0) if connections == 2 => Some(2),
        (Element::B, 0) if connections == 3 => Some(0),
        _ => None,
    }
}

/// Re-derive aromatic flags on a fully localised molecule (no aromatic bonds).
pub(crate) fn perceive_aromaticity(m: Molecule) -> Molecule {
    let rings = perceive_rings(&m);
    let mut aromatic_atoms = vec![false; m.atom_count()];
    let mut aromatic_bonds = vec![false; m.bond_count()];
    for ring in &rings {
        let mut total = 0u32;
        let mut ok = true;
        for &atom in ring {
            match pi_electrons(&m, atom) {
                Some(e) => total += e,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && total % 4 == 2 {
            for &atom in ring {
                aromatic_atoms[atom] = true;
            }
            for bi in ring_bonds(&m, ring) {
                aromatic_bonds[bi] = true;
            }
        }
    }
    let mut out = m;
    for (atom, flag) in out.atoms_mut().iter_mut().zip(&aromatic_atoms) {
        atom.aromatic = *flag;
    }
    for (bi, flag) in aromatic_bonds.iter().enumerate() {
        if *flag {
            out.set_bond_order(bi, BondOrder::Aromatic);
        }
    }
    out.refresh_flags()
}

/// Aromatic rings of an already-perceived molecule.
pub fn aromatic_rings(m: &Molecule) -> Vec<Vec<usize>> {
    perceive_rings(m)
        .into_iter()
        .filter(|ring| {
            ring.iter().all(|a| m.atoms()[*a].aromatic)
                && ring_bonds(m, ring)
                    .iter()
                    .all(|bi| m.bonds()[*bi].order == BondOrder::Aromatic)
        })
        .collect()
}
