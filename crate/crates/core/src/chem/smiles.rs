//! SMILES reader.
//!
//! Stereo markers (`/`, `\`, `@`), isotopes and atom classes are accepted and
//! discarded. Aromatic input is localised and aromaticity re-perceived, so
//! `C1=CC=CC=C1` and `c1ccccc1` produce the same molecule.

use std::collections::BTreeMap;

use super::aromatic::perceive_aromaticity;
use super::kekule::{bare_aromatic_fill, bare_fill, kekulize, pi_need};
use super::valence::check_valence;
use super::{Atom, Bond, BondOrder, ChemError, Element, Molecule};

/// Atom as written: bare atoms carry no hydrogen count or charge.
#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub element: Element,
    pub aromatic: bool,
    /// (hydrogens, charge) for bracket atoms
    pub bracket: Option<(u32, i32)>,
}

/// Bond as written; `None` means implicit (single, or aromatic between aromatic atoms).
#[derive(Debug, Clone)]
pub(crate) struct RawBond {
    pub a: usize,
    pub b: usize,
    pub order: Option<BondOrder>,
}

/// Parse a SMILES string into a sanitised molecule: rings perceived,
/// aromaticity assigned, implicit hydrogens filled and valences checked.
pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let (raw_atoms, raw_bonds) = read(text)?;
    sanitize(text, &raw_atoms, &raw_bonds)
}

/// Hydrogen fill, localisation, aromaticity perception and valence check.
pub(crate) fn sanitize(
    text: &str,
    raw_atoms: &[RawAtom],
    raw_bonds: &[RawBond],
) -> Result<Molecule, ChemError> {
    let (mol, needs) = assemble(text, raw_atoms, raw_bonds)?;

    let orders = kekulize(&mol, &needs).map_err(|atoms| ChemError::Kekulize {
        atoms: atoms.clone(),
        text: text.to_string(),
    })?;
    let mut atoms = mol.atoms().to_vec();
    for a in atoms.iter_mut() {
        a.aromatic = false;
    }
    let bonds: Vec<Bond> = mol
        .bonds()
        .iter()
        .zip(&orders)
        .map(|(b, o)| Bond::new(b.a, b.b, *o))
        .collect();
    let kekule = Molecule::new(atoms, bonds, text)?;
    let perceived = perceive_aromaticity(kekule);

    let report = check_valence(&perceived);
    if !report.ok {
        return Err(ChemError::Valence(report.summary()));
    }
    Ok(perceived)
}

/// Parse a fragment label: graph and hydrogen fill only, aromatic flags kept
/// as written, no localisation or valence check. Used for clique labels,
/// which need not be chemically complete on their own.
pub fn parse_fragment(text: &str) -> Result<Molecule, ChemError> {
    let (raw_atoms, raw_bonds) = read(text)?;
    let (mol, _) = assemble(text, &raw_atoms, &raw_bonds)?;
    Ok(mol)
}

fn syntax(pos: usize, msg: impl Into<String>) -> ChemError {
    ChemError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn read(text: &str) -> Result<(Vec<RawAtom>, Vec<RawBond>), ChemError> {
    if text.is_empty() {
        return Err(syntax(0, "empty SMILES"));
    }
    if !text.is_ascii() {
        return Err(syntax(0, "SMILES must be ASCII"));
    }
    let s = text.as_bytes();
    let mut atoms: Vec<RawAtom> = Vec::new();
    let mut bonds: Vec<RawBond> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondOrder, usize)> = None;
    let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
    let mut branch_empty = false;
    let mut rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)> = BTreeMap::new();
    let mut i = 0;

    while i < s.len() {
        let c = s[i] as char;
        match c {
            '(' => {
                if prev.is_none() {
                    return Err(syntax(i, "branch opened before any atom"));
                }
                if pending.is_some() {
                    return Err(syntax(i, "bond symbol before branch"));
                }
                if branch_empty {
                    return Err(syntax(i, "branch must start with an atom or bond"));
                }
                branches.push((prev, i));
                branch_empty = true;
                i += 1;
            }
            ')' => {
                let Some((p, _)) = branches.pop() else {
                    return Err(syntax(i, "unbalanced ')'"));
                };
                if branch_empty {
                    return Err(syntax(i, "empty branch"));
                }
                if pending.is_some() {
                    return Err(syntax(i, "dangling bond at branch end"));
                }
                prev = p;
                i += 1;
            }
            '.' => {
                if pending.is_some() {
                    return Err(syntax(i, "bond symbol before '.'"));
                }
                if !branches.is_empty() {
                    return Err(syntax(i, "'.' inside a branch"));
                }
                prev = None;
                i += 1;
            }
            '-' | '=' | '#' | ':' | '/' | '\\' => {
                if pending.is_some() {
                    return Err(syntax(i, "two consecutive bond symbols"));
                }
                if prev.is_none() {
                    return Err(syntax(i, "bond symbol without a preceding atom"));
                }
                let order = match c {
                    '=' => BondOrder::Double,
                    '#' => BondOrder::Triple,
                    ':' => BondOrder::Aromatic,
                    _ => BondOrder::Single,
                };
                pending = Some((order, i));
                i += 1;
            }
            '$' => return Err(syntax(i, "quadruple bonds are not supported")),
            '0'..='9' | '%' => {
                let start = i;
                let num = if c == '%' {
                    if i + 2 >= s.len() {
                        return Err(syntax(i, "truncated %nn ring closure"));
                    }
                    let d = &text[i + 1..i + 3];
                    if !d.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(syntax(i, "bad %nn ring closure"));
                    }
                    i += 3;
                    d.parse::<u32>().unwrap()
                } else {
                    i += 1;
                    c.to_digit(10).unwrap()
                };
                let Some(cur) = prev else {
                    return Err(syntax(start, "ring closure without an atom"));
                };
                let this_order = pending.take().map(|(o, _)| o);
                if let Some((open_atom, open_order, _)) = rings.remove(&num) {
                    if open_atom == cur {
                        return Err(syntax(start, "ring closure onto the same atom"));
                    }
                    let order = match (open_order, this_order) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(syntax(start, "conflicting ring-closure bond orders"))
                        }
                        (Some(a), _) => Some(a),
                        (None, b) => b,
                    };
                    if bonds
                        .iter()
                        .any(|b| (b.a == open_atom && b.b == cur) || (b.a == cur && b.b == open_atom))
                    {
                        return Err(syntax(start, "ring closure duplicates an existing bond"));
                    }
                    bonds.push(RawBond {
                        a: open_atom,
                        b: cur,
                        order,
                    });
                } else {
                    rings.insert(num, (cur, this_order, start));
                }
            }
            '[' => {
                let close = text[i..]
                    .find(']')
                    .map(|k| i + k)
                    .ok_or_else(|| syntax(i, "unterminated bracket atom"))?;
                let atom = read_bracket(&text[i + 1..close], i + 1)?;
                push_atom(atom, &mut atoms, &mut bonds, &mut prev, &mut pending)?;
                branch_empty = false;
                i = close + 1;
            }
            _ if c.is_ascii_alphabetic() => {
                let (element, aromatic, len) = read_organic(s, i)?;
                let atom = RawAtom {
                    element,
                    aromatic,
                    bracket: None,
                };
                push_atom(atom, &mut atoms, &mut bonds, &mut prev, &mut pending)?;
                branch_empty = false;
                i += len;
            }
            _ => return Err(syntax(i, format!("unexpected character '{c}'"))),
        }
    }
    if let Some((_, pos)) = branches.last() {
        return Err(syntax(*pos, "unbalanced '('"));
    }
    if let Some((_, (_, _, pos))) = rings.iter().next() {
        return Err(syntax(*pos, "unclosed ring bond"));
    }
    if let Some((_, pos)) = pending {
        return Err(syntax(pos, "dangling bond at end of input"));
    }
    if atoms.is_empty() {
        return Err(syntax(0, "no atoms"));
    }
    Ok((atoms, bonds))
}

fn push_atom(
    atom: RawAtom,
    atoms: &mut Vec<RawAtom>,
    bonds: &mut Vec<RawBond>,
    prev: &mut Option<usize>,
    pending: &mut Option<(BondOrder, usize)>,
) -> Result<(), ChemError> {
    let idx = atoms.len();
    atoms.push(atom);
    if let Some(p) = *prev {
        bonds.push(RawBond {
            a: p,
            b: idx,
            order: pending.take().map(|(o, _)| o),
        });
    } else if let Some((_, pos)) = pending {
        return Err(syntax(*pos, "bond symbol without a preceding atom"));
    }
    *prev = Some(idx);
    Ok(())
}

fn read_organic(s: &[u8], i: usize) -> Result<(Element, bool, usize), ChemError> {
    let c = s[i] as char;
    let next = s.get(i + 1).map(|b| *b as char);
    let found = match c {
        'C' if next == Some('l') => Some((Element::Cl, false, 2)),
        'B' if next == Some('r') => Some((Element::Br, false, 2)),
        'B' => Some((Element::B, false, 1)),
        'C' => Some((Element::C, false, 1)),
        'N' => Some((Element::N, false, 1)),
        'O' => Some((Element::O, false, 1)),
        'P' => Some((Element::P, false, 1)),
        'S' => Some((Element::S, false, 1)),
        'F' => Some((Element::F, false, 1)),
        'I' => Some((Element::I, false, 1)),
        'b' => Some((Element::B, true, 1)),
        'c' => Some((Element::C, true, 1)),
        'n' => Some((Element::N, true, 1)),
        'o' => Some((Element::O, true, 1)),
        'p' => Some((Element::P, true, 1)),
        's' => Some((Element::S, true, 1)),
        _ => None,
    };
    found.ok_or_else(|| {
        let mut sym = c.to_string();
        if let Some(n) = next.filter(|n| n.is_ascii_lowercase()) {
            if c.is_ascii_uppercase() {
                sym.push(n);
            }
        }
        ChemError::UnknownElement(sym)
    })
}

fn read_bracket(body: &str, offset: usize) -> Result<RawAtom, ChemError> {
    let b = body.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i >= b.len() {
        return Err(syntax(offset + i, "bracket atom without element"));
    }
    let (element, aromatic) = if b[i].is_ascii_uppercase() {
        let mut sym = (b[i] as char).to_string();
        i += 1;
        if i < b.len() && b[i].is_ascii_lowercase() {
            sym.push(b[i] as char);
            i += 1;
        }
        (sym.parse::<Element>()?, false)
    } else if b[i].is_ascii_lowercase() {
        let c = b[i] as char;
        i += 1;
        if i < b.len() && b[i].is_ascii_lowercase() {
            return Err(ChemError::UnknownElement(format!("{c}{}", b[i] as char)));
        }
        let el = match c {
            'b' => Element::B,
            'c' => Element::C,
            'n' => Element::N,
            'o' => Element::O,
            'p' => Element::P,
            's' => Element::S,
            _ => return Err(ChemError::UnknownElement(c.to_string())),
        };
        (el, true)
    } else {
        return Err(syntax(offset + i, "bad bracket atom"));
    };

    // chirality
    while i < b.len() && b[i] == b'@' {
        i += 1;
    }
    if i + 1 < b.len() && matches!(&body[i..i + 2], "TH" | "AL" | "SP" | "TB" | "OH") {
        i += 2;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }

    let mut h = 0u32;
    if i < b.len() && b[i] == b'H' {
        i += 1;
        h = 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i > start {
            h = body[start..i].parse().unwrap();
        }
    }

    let mut charge = 0i32;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        let sign = if b[i] == b'+' { 1 } else { -1 };
        let sym = b[i];
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i > start {
            charge = sign * body[start..i].parse::<i32>().unwrap();
        } else {
            charge = sign;
            while i < b.len() && b[i] == sym {
                charge += sign;
                i += 1;
            }
        }
        if charge.abs() > 4 {
            return Err(syntax(offset + start, "charge out of range"));
        }
    }

    if i < b.len() && b[i] == b':' {
        i += 1;
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err(syntax(offset + i, "atom class without digits"));
        }
    }
    if i != b.len() {
        return Err(syntax(offset + i, format!("bad charge or trailing text in [{body}]")));
    }
    Ok(RawAtom {
        element,
        aromatic,
        bracket: Some((h, charge)),
    })
}

/// Build the graph, resolve implicit bond orders and fill hydrogens.
/// Returns the molecule (aromatic bonds still delocalised) plus, per atom,
/// whether it needs a double bond inside its aromatic system.
fn assemble(
    text: &str,
    raw_atoms: &[RawAtom],
    raw_bonds: &[RawBond],
) -> Result<(Molecule, Vec<bool>), ChemError> {
    let atoms: Vec<Atom> = raw_atoms
        .iter()
        .enumerate()
        .map(|(i, r)| Atom {
            index: i,
            element: r.element,
            formal_charge: r.bracket.map(|(_, c)| c).unwrap_or(0),
            aromatic: r.aromatic,
            implicit_h: r.bracket.map(|(h, _)| h).unwrap_or(0),
        })
        .collect();
    let bonds: Vec<Bond> = raw_bonds
        .iter()
        .map(|rb| {
            let order = rb.order.unwrap_or(
                if raw_atoms[rb.a].aromatic && raw_atoms[rb.b].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                },
            );
            Bond::new(rb.a, rb.b, order)
        })
        .collect();
    let mol = Molecule::new(atoms, bonds, text)?;

    // aromatic bonds must lie in a ring; bonds between aromatic rings are single
    let mut atoms = mol.atoms().to_vec();
    let mut bonds = mol.bonds().to_vec();
    for bond in bonds.iter_mut() {
        if bond.order == BondOrder::Aromatic && !bond.in_ring {
            bond.order = BondOrder::Single;
        }
    }
    let mol = Molecule::new(atoms.clone(), bonds, text)?;

    let mut needs = vec![false; atoms.len()];
    for (i, atom) in atoms.iter_mut().enumerate() {
        let raw = &raw_atoms[i];
        let sum = mol.bond_order_sum(i);
        match (raw.bracket, raw.aromatic) {
            (Some((h, charge)), true) => {
                needs[i] = pi_need(raw.element, charge, sum + h).unwrap_or(false);
            }
            (Some(_), false) => {}
            (None, true) => {
                let (h, pi) = bare_aromatic_fill(raw.element, sum);
                atom.implicit_h = h;
                needs[i] = pi;
            }
            (None, false) => {
                atom.implicit_h = bare_fill(raw.element, sum).ok_or_else(|| {
                    ChemError::Valence(format!(
                        "atom {i} ({}) has bond-order sum {sum}, above every allowed valence",
                        raw.element
                    ))
                })?;
            }
        }
        if mol.aromatic_bond_count(i) == 0 {
            needs[i] = false;
        }
    }
    let bonds = mol.bonds().to_vec();
    Ok((Molecule::new(atoms, bonds, text)?, needs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bond_count(), 2);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Single));
        let h: Vec<u32> = m.atoms().iter().map(|a| a.implicit_h).collect();
        assert_eq!(h, vec![3, 2, 1]);
    }

    #[test]
    fn benzene_is_aromatic() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m.atoms().iter().all(|a| a.aromatic && a.implicit_h == 1));
        assert_eq!(m.bond_count(), 6);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        let k = parse_smiles("C1=CC=CC=C1").unwrap();
        assert!(k.atoms().iter().all(|a| a.aromatic));
    }

    #[test]
    fn syntax_errors() {
        for bad in ["C(", "C)", "C1CC", "C=", "=C", "C((C))", "C()", "[C", "", "C%1", "CC$C"] {
            assert!(
                matches!(parse_smiles(bad), Err(ChemError::Syntax { .. })),
                "{bad:?} should be a syntax error, got {:?}",
                parse_smiles(bad)
            );
        }
    }

    #[test]
    fn unknown_elements() {
        for bad in ["[Na+].[Cl-]", "CX", "[Fe]", "[se]1cccc1", "Ca"] {
            assert!(
                matches!(parse_smiles(bad), Err(ChemError::UnknownElement(_))),
                "{bad}: {:?}",
                parse_smiles(bad)
            );
        }
    }

    #[test]
    fn bad_charge_token() {
        assert!(matches!(parse_smiles("[N+a]"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("[C+9]"), Err(ChemError::Syntax { .. })));
    }

    #[test]
    fn valence_errors() {
        assert!(matches!(parse_smiles("C(C)(C)(C)(C)C"), Err(ChemError::Valence(_))));
        assert!(matches!(parse_smiles("CN(=O)=O"), Err(ChemError::Valence(_))));
        assert!(matches!(parse_smiles("[CH5]"), Err(ChemError::Valence(_))));
    }

    #[test]
    fn stereo_is_discarded() {
        let a = parse_smiles("C/C=C/C").unwrap();
        let b = parse_smiles("CC=CC").unwrap();
        assert_eq!(a.atoms(), b.atoms());
        let c = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(c.atoms()[1].implicit_h, 1);
    }

    #[test]
    fn heteroaromatics() {
        let pyrrole = parse_smiles("c1cc[nH]c1").unwrap();
        assert!(pyrrole.atoms().iter().all(|a| a.aromatic));
        let pyridine = parse_smiles("c1ccncc1").unwrap();
        assert!(pyridine.atoms().iter().all(|a| a.aromatic));
        let furan = parse_smiles("c1ccoc1").unwrap();
        assert!(furan.atoms().iter().all(|a| a.aromatic));
        let thiophene = parse_smiles("c1ccsc1").unwrap();
        assert!(thiophene.atoms().iter().all(|a| a.aromatic));
        // pyrrole without the explicit hydrogen cannot be localised
        assert!(matches!(parse_smiles("c1ccnc1"), Err(ChemError::Kekulize { .. })));
    }

    #[test]
    fn biphenyl_link_is_single_even_without_dash() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = m.bonds().iter().filter(|b| !b.in_ring).collect::<Vec<_>>();
        assert_eq!(link.len(), 1);
        assert_eq!(link[0].order, BondOrder::Single);
    }

    #[test]
    fn charges() {
        let m = parse_smiles("C[N+](=O)[O-]").unwrap();
        assert_eq!(m.atoms()[1].formal_charge, 1);
        assert_eq!(m.atoms()[3].formal_charge, -1);
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.atoms()[0].implicit_h, 4);
        let m = parse_smiles("[O--]").unwrap();
        assert_eq!(m.atoms()[0].formal_charge, -2);
    }

    #[test]
    fn two_digit_ring_closures() {
        let a = parse_smiles("C%10CCCCC%10").unwrap();
        assert_eq!(a.bond_count(), 6);
    }

    #[test]
    fn cyclohexene_is_not_aromatic() {
        let m = parse_smiles("C1=CCCCC1").unwrap();
        assert!(m.atoms().iter().all(|a| !a.aromatic));
    }
}
