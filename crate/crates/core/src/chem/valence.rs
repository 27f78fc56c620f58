use std::fmt;

use super::kekule::{kekulize, pi_need};
use super::{BondOrder, Element, Molecule};

#[derive(Debug, Clone, PartialEq)]
pub struct ValenceProblem {
    pub atom: usize,
    pub element: Element,
    pub charge: i32,
    /// Bond-order sum plus hydrogens, aromatic pi bond included when localised.
    pub valence: i32,
    pub allowed: Vec<i32>,
    pub reason: String,
}

impl fmt::Display for ValenceProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "atom {} ({}{:+}): valence {} not in {:?}: {}",
            self.atom, self.element, self.charge, self.valence, self.allowed, self.reason
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValenceReport {
    pub ok: bool,
    pub problems: Vec<ValenceProblem>,
}

impl ValenceReport {
    pub fn summary(&self) -> String {
        self.problems
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Check every atom's valence against the element table.
///
/// An atom passes iff bond orders plus hydrogens, shifted by the charge
/// adjustment, equals an allowed valence (C 4; N 3; O 2; S 2/4/6; P 3/5;
/// halogens 1; B 3). Aromatic systems are localised first so each aromatic
/// atom is judged with its pi bond in place.
pub fn check_valence(m: &Molecule) -> ValenceReport {
    let mut problems = Vec::new();
    let n = m.atom_count();
    let mut needs = vec![false; n];
    let mut aromatic_ok = vec![true; n];
    for (i, atom) in m.atoms().iter().enumerate() {
        if m.aromatic_bond_count(i) == 0 {
            continue;
        }
        let used = m.bond_order_sum(i) + atom.implicit_h;
        match pi_need(atom.element, atom.formal_charge, used) {
            Some(need) => needs[i] = need,
            None => aromatic_ok[i] = false,
        }
    }
    let localised = kekulize(m, &needs);
    if let Err(unmatched) = &localised {
        for &i in unmatched {
            aromatic_ok[i] = false;
        }
    }

    for (i, atom) in m.atoms().iter().enumerate() {
        let allowed: Vec<i32> = atom.element.allowed_valences(atom.formal_charge).collect();
        let mut used = m.bond_order_sum(i) as i32 + atom.implicit_h as i32;
        if m.aromatic_bond_count(i) > 0 {
            if !aromatic_ok[i] {
                problems.push(ValenceProblem {
                    atom: i,
                    element: atom.element,
                    charge: atom.formal_charge,
                    valence: used,
                    allowed,
                    reason: "aromatic system cannot be localised".into(),
                });
                continue;
            }
            if needs[i] {
                used += 1;
            }
        }
        if !allowed.contains(&used) {
            problems.push(ValenceProblem {
                atom: i,
                element: atom.element,
                charge: atom.formal_charge,
                valence: used,
                allowed,
                reason: if used > atom.element.valences().iter().map(|v| *v as i32).max().unwrap_or(0) {
                    "exceeds allowed valence".into()
                } else {
                    "valence not in allowed set".into()
                },
            });
        }
    }
    ValenceReport {
        ok: problems.is_empty(),
        problems,
    }
}

/// Whether `m` contains any aromatic bond.
pub fn has_aromatic_bonds(m: &Molecule) -> bool {
    m.bonds().iter().any(|b| b.order == BondOrder::Aromatic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles, Atom, Bond};

    #[test]
    fn ethanol_passes() {
        assert!(check_valence(&parse_smiles("CCO").unwrap()).ok);
    }

    #[test]
    fn five_bonded_carbon_fails_at_that_atom() {
        let mut atoms: Vec<Atom> = (0..6).map(|i| Atom::new(i, Element::C)).collect();
        for (i, a) in atoms.iter_mut().enumerate() {
            a.implicit_h = if i == 0 { 0 } else { 3 };
        }
        let bonds = (1..6).map(|i| Bond::new(0, i, BondOrder::Single)).collect();
        let m = Molecule::new(atoms, bonds, "").unwrap();
        let r = check_valence(&m);
        assert!(!r.ok);
        assert_eq!(r.problems.len(), 1);
        assert_eq!(r.problems[0].atom, 0);
        assert_eq!(r.problems[0].valence, 5);
    }

    #[test]
    fn sulfuric_acid_uses_hexavalent_sulfur() {
        let m = parse_smiles("O=S(=O)(O)O").unwrap();
        assert!(check_valence(&m).ok);
        // S: two double bonds (2+2) and two single bonds (1+1) = 6
        assert_eq!(m.bond_order_sum(1) + m.atoms()[1].implicit_h, 6);
    }

    #[test]
    fn charged_atoms() {
        for s in ["C[N+](C)(C)C", "[O-]C=O", "C[N+](=O)[O-]", "[NH4+]", "[Cl-]", "c1cc[nH+]cc1"] {
            assert!(check_valence(&parse_smiles(s).unwrap()).ok, "{s}");
        }
    }

    #[test]
    fn hand_built_aromatic_with_wrong_hydrogens_fails() {
        let mut m = parse_smiles("c1ccccc1").unwrap();
        m.atoms_mut()[0].implicit_h = 2;
        assert!(!check_valence(&m).ok);
    }
}
