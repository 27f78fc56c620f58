use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::aromatic::aromatic_rings;
use super::{BondOrder, Element, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Descriptors {
    pub mw: f64,
    pub hbd: u32,
    pub hba: u32,
    pub rot_bonds: u32,
    pub aromatic_rings: u32,
    pub logp: f64,
}

const CRIPPEN_TABLE: &str = include_str!("../../data/crippen_v1.tsv");

fn crippen() -> &'static HashMap<String, f64> {
    static TABLE: OnceLock<HashMap<String, f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        CRIPPEN_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut cols = l.split('\t');
                let key = cols.next().unwrap().to_string();
                let value: f64 = cols
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .unwrap_or_else(|| panic!("bad crippen row: {l}"));
                (key, value)
            })
            .collect()
    })
}

/// Physicochemical descriptors. An empty molecule yields all zeros.
pub fn compute_descriptors(m: &Molecule) -> Descriptors {
    if m.is_empty() {
        return Descriptors::default();
    }
    let mut d = Descriptors::default();
    for (i, atom) in m.atoms().iter().enumerate() {
        d.mw += atom.element.atomic_weight() + atom.implicit_h as f64 * Element::H.atomic_weight();
        if matches!(atom.element, Element::N | Element::O) {
            d.hba += 1;
            if m.total_h(i) > 0 {
                d.hbd += 1;
            }
        }
    }
    d.rot_bonds = m.bonds().iter().filter(|b| b.rotatable).count() as u32;
    d.aromatic_rings = aromatic_rings(m).len() as u32;
    d.logp = crippen_logp(m);
    d
}

/// Atom-contribution logP summed over heavy-atom types and their hydrogens.
pub fn crippen_logp(m: &Molecule) -> f64 {
    let table = crippen();
    let mut total = 0.0;
    for i in 0..m.atom_count() {
        if m.atoms()[i].element == Element::H {
            continue;
        }
        let (heavy, hydrogen) = atom_types(m, i);
        total += table[heavy];
        total += table[hydrogen] * m.total_h(i) as f64;
    }
    total
}

fn is_hetero(e: Element) -> bool {
    !matches!(e, Element::C | Element::H)
}

/// Crippen type of a heavy atom and of the hydrogens it carries.
pub(crate) fn atom_types(m: &Molecule, i: usize) -> (&'static str, &'static str) {
    let atom = &m.atoms()[i];
    let nbrs: Vec<(usize, BondOrder)> = m
        .neighbors(i)
        .iter()
        .map(|(v, bi)| (*v, m.bonds()[*bi].order))
        .filter(|(v, _)| m.atoms()[*v].element != Element::H)
        .collect();
    let heavy = nbrs.len();
    let has = |o: BondOrder| nbrs.iter().any(|(_, bo)| *bo == o);
    match atom.element {
        Element::C => {
            let h = "H1";
            if atom.aromatic {
                let aromatic_nbrs = nbrs.iter().filter(|(_, o)| *o == BondOrder::Aromatic).count();
                let t = if m.total_h(i) > 0 {
                    "C18"
                } else if aromatic_nbrs >= 3 {
                    "C19"
                } else {
                    "C21"
                };
                return (t, h);
            }
            let hetero_multiple = nbrs.iter().any(|(v, o)| {
                matches!(o, BondOrder::Double | BondOrder::Triple) && is_hetero(m.atoms()[*v].element)
            });
            if hetero_multiple {
                return ("C5", h);
            }
            if has(BondOrder::Triple) {
                return ("C7", h);
            }
            if has(BondOrder::Double) {
                return ("C6", h);
            }
            let hetero = nbrs.iter().any(|(v, _)| is_hetero(m.atoms()[*v].element));
            let t = match (hetero, heavy <= 2) {
                (false, true) => "C1",
                (false, false) => "C2",
                (true, true) => "C3",
                (true, false) => "C4",
            };
            (t, h)
        }
        Element::N => {
            let t = if atom.formal_charge != 0 {
                "N13"
            } else if atom.aromatic {
                "N11"
            } else if has(BondOrder::Double) || has(BondOrder::Triple) {
                "N14"
            } else {
                match m.total_h(i) {
                    0 => "N3",
                    1 => "N2",
                    _ => "N1",
                }
            };
            (t, "H3")
        }
        Element::O => {
            if atom.formal_charge < 0 {
                return ("O12", "H2");
            }
            if atom.aromatic {
                return ("O1", "H2");
            }
            if has(BondOrder::Double) {
                let (partner, _) = nbrs[0];
                let p = &m.atoms()[partner];
                let acid_like = m.neighbors(partner).iter().any(|(v, bi)| {
                    *v != i
                        && m.bonds()[*bi].order == BondOrder::Single
                        && matches!(m.atoms()[*v].element, Element::N | Element::O)
                });
                let t = if acid_like {
                    "O11"
                } else if m
                    .neighbors(partner)
                    .iter()
                    .any(|(v, _)| m.atoms()[*v].aromatic)
                    || p.aromatic
                {
                    "O10"
                } else {
                    "O9"
                };
                return (t, "H2");
            }
            if m.total_h(i) > 0 {
                let acid = nbrs.iter().any(|(v, _)| {
                    m.neighbors(*v).iter().any(|(w, bi)| {
                        *w != i
                            && m.bonds()[*bi].order == BondOrder::Double
                            && m.atoms()[*w].element == Element::O
                    })
                });
                return ("O2", if acid { "H4" } else { "H2" });
            }
            let aryl = nbrs.iter().any(|(v, _)| m.atoms()[*v].aromatic);
            (if aryl { "O4" } else { "O3" }, "H2")
        }
        Element::S => {
            let t = if atom.formal_charge != 0 {
                "S2"
            } else if atom.aromatic {
                "S3"
            } else {
                "S1"
            };
            (t, "H1")
        }
        Element::P => ("P", "H1"),
        Element::B => ("B", "H1"),
        Element::F => ("F", "H1"),
        Element::Cl => ("Cl", "H1"),
        Element::Br => ("Br", "H1"),
        Element::I => ("I", "H1"),
        Element::H => ("H1", "H1"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn ethanol() {
        let d = compute_descriptors(&parse_smiles("CCO").unwrap());
        // 2 C + 6 H + 1 O
        let expected = 2.0 * 12.011 + 6.0 * 1.008 + 15.999;
        assert!((d.mw - expected).abs() < 1e-9);
        assert!((d.mw - 46.069).abs() < 0.01);
        assert_eq!((d.hbd, d.hba, d.rot_bonds), (1, 1, 0));
        // C1 + C3 + O2 + 5 H1 + H2
        let logp = 0.1441 - 0.2035 - 0.2893 + 5.0 * 0.1230 - 0.2677;
        assert!((d.logp - logp).abs() < 1e-12);
    }

    #[test]
    fn benzene() {
        let d = compute_descriptors(&parse_smiles("c1ccccc1").unwrap());
        assert_eq!((d.hbd, d.hba, d.aromatic_rings), (0, 0, 1));
        assert!((d.logp - 6.0 * (0.1581 + 0.1230)).abs() < 1e-12);
    }

    #[test]
    fn empty_molecule_is_zeroed() {
        assert_eq!(compute_descriptors(&Molecule::empty()), Descriptors::default());
    }

    #[test]
    fn every_table_entry_parses() {
        assert!(crippen().len() >= 30);
        assert!(crippen().values().all(|v| v.is_finite()));
    }

    #[test]
    fn acid_and_amide_oxygen_types() {
        let acid = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(atom_types(&acid, 2).0, "O11");
        assert_eq!(atom_types(&acid, 3), ("O2", "H4"));
        let anisole = parse_smiles("COc1ccccc1").unwrap();
        assert_eq!(atom_types(&anisole, 1).0, "O4");
    }
}
