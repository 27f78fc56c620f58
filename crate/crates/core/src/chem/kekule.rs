//! Localising aromatic bonds into alternating single/double bonds.

use super::{BondOrder, Element, Molecule};

/// Whether an aromatic atom must take a double bond inside its aromatic
/// system, given its bond-order sum and hydrogen count. `None` when no
/// allowed valence fits at all.
pub(crate) fn pi_need(element: Element, charge: i32, used: u32) -> Option<bool> {
    let used = used as i32;
    let mut allowed = element.allowed_valences(charge);
    let allowed: Vec<i32> = allowed.by_ref().collect();
    if allowed.contains(&used) {
        Some(false)
    } else if allowed.contains(&(used + 1)) {
        Some(true)
    } else {
        None
    }
}

/// Hydrogen count and pi need for an aromatic atom written without brackets.
pub(crate) fn bare_aromatic_fill(element: Element, sum: u32) -> (u32, bool) {
    match element.valences().iter().find(|v| **v >= sum) {
        Some(v) if v - sum >= 1 => (v - sum - 1, true),
        _ => (0, false),
    }
}

/// Hydrogen count for a non-aromatic atom written without brackets, or
/// `None` when the bonds already exceed every allowed valence.
pub(crate) fn bare_fill(element: Element, sum: u32) -> Option<u32> {
    element
        .valences()
        .iter()
        .find(|v| **v >= sum)
        .map(|v| v - sum)
}

/// Assign single/double orders to every aromatic bond so that each atom in
/// `needs` gets exactly one double bond. Returns per-bond orders (non-aromatic
/// bonds unchanged), or the atoms left unmatched.
pub(crate) fn kekulize(m: &Molecule, needs: &[bool]) -> Result<Vec<BondOrder>, Vec<usize>> {
    let n = m.atom_count();
    let mut orders: Vec<BondOrder> = m.bonds().iter().map(|b| b.order).collect();
    let options: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|i| {
            if !needs[i] {
                return Vec::new();
            }
            let mut v: Vec<(usize, usize)> = m
                .neighbors(i)
                .iter()
                .filter(|(nb, bi)| needs[*nb] && m.bonds()[*bi].order == BondOrder::Aromatic)
                .copied()
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut mate: Vec<Option<usize>> = vec![None; n];
    let mut budget = 200_000usize;
    if !solve(&options, needs, &mut mate, &mut budget) {
        let unmatched = (0..n).filter(|&i| needs[i] && mate[i].is_none()).collect::<Vec<_>>();
        let unmatched = if unmatched.is_empty() {
            (0..n).filter(|&i| needs[i]).collect()
        } else {
            unmatched
        };
        return Err(unmatched);
    }
    for (bi, bond) in m.bonds().iter().enumerate() {
        if bond.order == BondOrder::Aromatic {
            orders[bi] = if mate[bond.a] == Some(bond.b) {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
        }
    }
    Ok(orders)
}

fn solve(
    options: &[Vec<(usize, usize)>],
    needs: &[bool],
    mate: &mut [Option<usize>],
    budget: &mut usize,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    // most constrained unmatched atom first
    let mut pick: Option<(usize, usize)> = None;
    for i in 0..mate.len() {
        if !needs[i] || mate[i].is_some() {
            continue;
        }
        let free = options[i].iter().filter(|(nb, _)| mate[*nb].is_none()).count();
        if free == 0 {
            return false;
        }
        if pick.is_none_or(|(_, f)| free < f) {
            pick = Some((i, free));
        }
    }
    let Some((atom, _)) = pick else {
        return true;
    };
    for &(nb, _) in &options[atom] {
        if mate[nb].is_some() {
            continue;
        }
        mate[atom] = Some(nb);
        mate[nb] = Some(atom);
        if solve(options, needs, mate, budget) {
            return true;
        }
        mate[atom] = None;
        mate[nb] = None;
    }
    false
}
