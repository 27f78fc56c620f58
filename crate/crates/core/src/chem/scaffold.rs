use super::{write_canonical_smiles, BondOrder, Element, Molecule};

/// Bemis–Murcko framework: ring systems plus the linkers joining them.
///
/// Non-ring atoms with at most one heavy neighbour are stripped repeatedly;
/// terminal atoms double-bonded to a surviving atom (carbonyl oxygens and
/// the like) are kept. Acyclic or empty input yields the empty molecule.
pub fn murcko_scaffold(m: &Molecule) -> Molecule {
    if m.bonds().iter().all(|b| !b.in_ring) {
        return Molecule::empty();
    }
    let n = m.atom_count();
    let in_ring: Vec<bool> = (0..n)
        .map(|i| m.neighbors(i).iter().any(|(_, bi)| m.bonds()[*bi].in_ring))
        .collect();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !alive[i] || in_ring[i] {
                continue;
            }
            let live_degree = m
                .neighbors(i)
                .iter()
                .filter(|(v, _)| alive[*v] && m.atoms()[*v].element != Element::H)
                .count();
            if live_degree <= 1 {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let core = alive.clone();
    for i in 0..n {
        if core[i] || m.atoms()[i].element == Element::H {
            continue;
        }
        let heavy: Vec<&(usize, usize)> = m
            .neighbors(i)
            .iter()
            .filter(|(v, _)| m.atoms()[*v].element != Element::H)
            .collect();
        if let [(v, bi)] = heavy.as_slice() {
            if core[*v] && m.bonds()[*bi].order == BondOrder::Double {
                alive[i] = true;
            }
        }
    }

    let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    let mut lost = vec![0u32; n];
    for b in m.bonds() {
        if alive[b.a] != alive[b.b] {
            let kept = if alive[b.a] { b.a } else { b.b };
            lost[kept] += b.order.valence_units();
        }
    }
    let (mut scaffold, _) = m.induced(&keep);
    for (atom, &old) in scaffold.atoms_mut().iter_mut().zip(&keep) {
        atom.implicit_h += lost[old];
    }
    let text = write_canonical_smiles(&scaffold);
    let mut out = scaffold;
    out.set_source_text(text);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{check_valence, parse_smiles};

    fn scaffold_of(s: &str) -> String {
        write_canonical_smiles(&murcko_scaffold(&parse_smiles(s).unwrap()))
    }

    fn canon(s: &str) -> String {
        write_canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn toluene_to_benzene() {
        assert_eq!(scaffold_of("Cc1ccccc1"), canon("c1ccccc1"));
    }

    #[test]
    fn acyclic_and_empty() {
        assert!(murcko_scaffold(&parse_smiles("CCO").unwrap()).is_empty());
        assert!(murcko_scaffold(&Molecule::empty()).is_empty());
    }

    #[test]
    fn ethyl_biphenyl() {
        assert_eq!(scaffold_of("CCc1ccc(-c2ccccc2)cc1"), canon("c1ccc(-c2ccccc2)cc1"));
    }

    #[test]
    fn linker_and_carbonyl_kept() {
        assert_eq!(
            scaffold_of("CC(C)c1ccc(CC(=O)c2ccccc2)cc1"),
            canon("O=C(Cc1ccccc1)c1ccccc1")
        );
    }

    #[test]
    fn scaffolds_are_valid() {
        for s in ["Cc1ccc(O)cc1N", "CN1CCN(C)CC1", "O=C1CCCC1C(C)=O", "c1ccc2[nH]ccc2c1CC"] {
            let sc = murcko_scaffold(&parse_smiles(s).unwrap());
            assert!(check_valence(&sc).ok, "{s}: {}", check_valence(&sc).summary());
        }
    }
}
