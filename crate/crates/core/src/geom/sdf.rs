use crate::chem::{sanitize, BondOrder, Element, Molecule, RawAtom, RawBond};

use super::{Conformer, GeomError};

fn field(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        ""
    } else {
        line.get(start..end).unwrap_or("").trim()
    }
}

fn charge_from_code(code: i32) -> i32 {
    match code {
        1..=3 => 4 - code,
        5..=7 => 4 - code,
        _ => 0,
    }
}

/// Parse every `$$$$`-separated V2000 record into a molecule and its
/// conformer. Hydrogens absent from the atom block become implicit.
pub fn parse_sdf_v2000(text: &str) -> Result<Vec<(Molecule, Conformer)>, GeomError> {
    let mut out = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let mut record = 0;
    for line in text.lines() {
        if line.trim_end() == "$$$$" {
            if block.iter().any(|l| !l.trim().is_empty()) {
                out.push(parse_record(&block, record)?);
            }
            record += 1;
            block.clear();
        } else {
            block.push(line);
        }
    }
    if block.iter().any(|l| !l.trim().is_empty()) {
        out.push(parse_record(&block, record)?);
    }
    Ok(out)
}

fn parse_record(lines: &[&str], record: usize) -> Result<(Molecule, Conformer), GeomError> {
    let fmt = |line: usize, msg: String| GeomError::Format { record, line: line + 1, msg };
    let counts = *lines
        .get(3)
        .ok_or_else(|| fmt(3, "missing counts line".into()))?;
    let tag = field(counts, 33, 39);
    if !tag.is_empty() && tag != "V2000" {
        return Err(GeomError::UnsupportedVersion { record, tag: tag.to_string() });
    }
    let n_atoms: usize = field(counts, 0, 3)
        .parse()
        .map_err(|_| fmt(3, format!("bad atom count '{}'", field(counts, 0, 3))))?;
    let n_bonds: usize = field(counts, 3, 6)
        .parse()
        .map_err(|_| fmt(3, format!("bad bond count '{}'", field(counts, 3, 6))))?;

    let body = &lines[4..];
    let looks_like_atom = |l: &str| {
        l.len() >= 34 && !field(l, 31, 34).is_empty() && field(l, 0, 10).contains('.')
    };
    let looks_like_bond = |l: &str| {
        !l.starts_with("M  ") && (0..3).all(|k| field(l, 3 * k, 3 * k + 3).parse::<usize>().is_ok())
    };
    let atom_lines: Vec<&str> = body.iter().take(n_atoms).copied().collect();
    let found_atoms = atom_lines.iter().take_while(|l| looks_like_atom(l)).count();
    if found_atoms < n_atoms {
        return Err(GeomError::CountsMismatch { record, what: "atoms", declared: n_atoms, found: found_atoms });
    }
    let bond_lines: Vec<&str> = body.iter().skip(n_atoms).take(n_bonds).copied().collect();
    let found_bonds = bond_lines.iter().take_while(|l| looks_like_bond(l)).count();
    if found_bonds < n_bonds {
        return Err(GeomError::CountsMismatch { record, what: "bonds", declared: n_bonds, found: found_bonds });
    }

    let mut coords = Vec::with_capacity(n_atoms);
    let mut elements = Vec::with_capacity(n_atoms);
    let mut charges = vec![0i32; n_atoms];
    for (i, line) in atom_lines.iter().enumerate() {
        let ln = 4 + i;
        let mut p = [0.0; 3];
        for (axis, slot) in p.iter_mut().enumerate() {
            let raw = field(line, axis * 10, axis * 10 + 10);
            *slot = raw
                .parse()
                .map_err(|_| fmt(ln, format!("non-numeric coordinate '{raw}'")))?;
        }
        coords.push(p);
        let sym = field(line, 31, 34);
        let element: Element = sym.parse().map_err(|e| GeomError::Chem { record, source: e })?;
        elements.push(element);
        if let Ok(code) = field(line, 36, 39).parse::<i32>() {
            charges[i] = charge_from_code(code);
        }
    }

    let mut bonds = Vec::with_capacity(n_bonds);
    for (k, line) in bond_lines.iter().enumerate() {
        let ln = 4 + n_atoms + k;
        let parse_idx = |s: &str| -> Result<usize, GeomError> {
            let v: usize = s.parse().map_err(|_| fmt(ln, format!("bad atom number '{s}'")))?;
            if v == 0 || v > n_atoms {
                return Err(fmt(ln, format!("atom number {v} outside 1..={n_atoms}")));
            }
            Ok(v - 1)
        };
        let a = parse_idx(field(line, 0, 3))?;
        let b = parse_idx(field(line, 3, 6))?;
        let order = match field(line, 6, 9) {
            "1" => BondOrder::Single,
            "2" => BondOrder::Double,
            "3" => BondOrder::Triple,
            "4" => BondOrder::Aromatic,
            other => return Err(fmt(ln, format!("unsupported bond type '{other}'"))),
        };
        bonds.push((a, b, order));
    }

    // property block: M  CHG overrides atom-block charges
    let mut chg_seen = false;
    for (k, line) in body.iter().enumerate().skip(n_atoms + n_bonds) {
        if line.starts_with("M  END") {
            break;
        }
        if let Some(rest) = line.strip_prefix("M  CHG") {
            if !chg_seen {
                charges.iter_mut().for_each(|c| *c = 0);
                chg_seen = true;
            }
            let nums: Vec<i64> = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| fmt(4 + k, format!("bad M  CHG entry '{t}'"))))
                .collect::<Result<_, _>>()?;
            let count = *nums.first().unwrap_or(&0) as usize;
            if nums.len() < 1 + 2 * count {
                return Err(fmt(4 + k, "truncated M  CHG line".into()));
            }
            for pair in nums[1..1 + 2 * count].chunks(2) {
                let atom = pair[0] as usize;
                if atom == 0 || atom > n_atoms {
                    return Err(fmt(4 + k, format!("M  CHG names atom {atom}")));
                }
                charges[atom - 1] = pair[1] as i32;
            }
        }
    }

    let aromatic: Vec<bool> = (0..n_atoms)
        .map(|i| bonds.iter().any(|&(a, b, o)| o == BondOrder::Aromatic && (a == i || b == i)))
        .collect();
    let raw_atoms: Vec<RawAtom> = (0..n_atoms)
        .map(|i| {
            let charge = charges[i];
            let bracket = (charge != 0).then(|| {
                let sum: u32 = bonds
                    .iter()
                    .filter(|&&(a, b, _)| a == i || b == i)
                    .map(|&(_, _, o)| o.valence_units())
                    .sum::<u32>()
                    + aromatic[i] as u32;
                let h = elements[i]
                    .allowed_valences(charge)
                    .filter(|v| *v >= sum as i32)
                    .min()
                    .map_or(0, |v| (v - sum as i32) as u32);
                (h, charge)
            });
            RawAtom { element: elements[i], aromatic: aromatic[i], bracket }
        })
        .collect();
    let raw_bonds: Vec<RawBond> = bonds
        .iter()
        .map(|&(a, b, order)| RawBond { a, b, order: Some(order) })
        .collect();
    let title = lines.first().map(|l| l.trim()).unwrap_or("");
    let mol = sanitize(title, &raw_atoms, &raw_bonds).map_err(|e| GeomError::Chem { record, source: e })?;
    Ok((mol, Conformer::new(coords)?))
}

/// Minimal V2000 writer: heavy atoms and bonds as stored, charges on M  CHG.
pub fn write_sdf_v2000(records: &[(&Molecule, &Conformer)]) -> String {
    let mut out = String::new();
    for (m, c) in records {
        out.push_str(m.source_text());
        out.push_str("\n  lcglue\n\n");
        out.push_str(&format!("{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000\n", m.atom_count(), m.bond_count()));
        for (a, p) in m.atoms().iter().zip(c.coords()) {
            out.push_str(&format!(
                "{:>10.4}{:>10.4}{:>10.4} {:<3} 0  0  0  0  0  0  0  0  0  0  0  0\n",
                p[0], p[1], p[2], a.element.symbol()
            ));
        }
        for b in m.bonds() {
            let t = match b.order {
                BondOrder::Single => 1,
                BondOrder::Double => 2,
                BondOrder::Triple => 3,
                BondOrder::Aromatic => 4,
            };
            out.push_str(&format!("{:>3}{:>3}{:>3}  0\n", b.a + 1, b.b + 1, t));
        }
        let charged: Vec<_> = m.atoms().iter().filter(|a| a.formal_charge != 0).collect();
        for chunk in charged.chunks(8) {
            out.push_str(&format!("M  CHG{:>3}", chunk.len()));
            for a in chunk {
                out.push_str(&format!(" {:>3} {:>3}", a.index + 1, a.formal_charge));
            }
            out.push('\n');
        }
        out.push_str("M  END\n$$$$\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETHANE: &str = "ethane
  hand

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.5400    0.1000   -0.2000 C   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
M  END
";

    #[test]
    fn two_atom_block() {
        let recs = parse_sdf_v2000(ETHANE).unwrap();
        assert_eq!(recs.len(), 1);
        let (m, c) = &recs[0];
        assert_eq!(m.atom_count(), 2);
        assert_eq!(m.atoms()[0].implicit_h, 3);
        assert_eq!(c.coords()[1], [1.54, 0.1, -0.2]);
    }

    #[test]
    fn three_records_in_order() {
        let text = format!("{ETHANE}$$$$\n{ETHANE}$$$$\n{}$$$$\n", ETHANE.replace("ethane", "third"));
        let recs = parse_sdf_v2000(&text).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[2].0.source_text(), "third");
    }

    #[test]
    fn truncated_atom_block() {
        let text = ETHANE.replace("  2  1  0", "  3  1  0");
        assert!(matches!(
            parse_sdf_v2000(&text),
            Err(GeomError::CountsMismatch { what: "atoms", .. })
        ));
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(
            parse_sdf_v2000(&ETHANE.replace("V2000", "V3000")),
            Err(GeomError::UnsupportedVersion { .. })
        ));
        assert!(matches!(
            parse_sdf_v2000(&ETHANE.replace("1.5400", "1.5x00")),
            Err(GeomError::Format { .. })
        ));
    }

    #[test]
    fn charges_and_aromatic_bonds() {
        let m = crate::chem::parse_smiles("c1cc[nH+]cc1").unwrap();
        let c = Conformer::new(vec![[0.0; 3]; m.atom_count()]).unwrap();
        let text = write_sdf_v2000(&[(&m, &c)]);
        let (back, _) = &parse_sdf_v2000(&text).unwrap()[0];
        assert_eq!(
            crate::chem::write_canonical_smiles(back),
            crate::chem::write_canonical_smiles(&m)
        );
    }
}
