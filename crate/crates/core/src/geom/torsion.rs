use crate::chem::{Element, Molecule};

use super::{Conformer, GeomError, Point};

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Bonds that are single, acyclic and join two atoms of heavy degree ≥ 2.
pub fn find_rotatable_bonds(m: &Molecule) -> Vec<usize> {
    (0..m.bond_count()).filter(|&b| m.bonds()[b].rotatable).collect()
}

/// Signed dihedral i-j-k-l in degrees, in (−180, 180]. Positive is
/// clockwise when looking from j towards k.
pub fn dihedral_angle(c: &Conformer, i: usize, j: usize, k: usize, l: usize) -> Result<f64, GeomError> {
    let idx = [i, j, k, l];
    if idx.iter().any(|&x| x >= c.len()) {
        return Err(GeomError::Degenerate(format!("atom index out of range in {idx:?}")));
    }
    for a in 0..4 {
        for b in a + 1..4 {
            if idx[a] == idx[b] {
                return Err(GeomError::Degenerate(format!("repeated atom in {idx:?}")));
            }
        }
    }
    let p = c.coords();
    let b1 = sub(p[j], p[i]);
    let b2 = sub(p[k], p[j]);
    let b3 = sub(p[l], p[k]);
    let n1 = cross(b1, b2);
    let n2 = cross(b2, b3);
    let scale = norm(b1).max(norm(b2)).max(norm(b3)).max(1.0);
    let eps = 1e-12 * scale * scale;
    if norm(n1) < eps || norm(n2) < eps {
        return Err(GeomError::Degenerate(format!("collinear atoms in {idx:?}")));
    }
    let y = norm(b2) * dot(b1, n2);
    let x = dot(n1, n2);
    let deg = y.atan2(x).to_degrees();
    Ok(if deg <= -180.0 { deg + 360.0 } else { deg })
}

/// Per-bond (sin θ, cos θ, has_torsion) triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionFeatures {
    pub per_bond: Vec<[f64; 3]>,
    /// Rotatable bonds whose geometry was degenerate.
    pub warnings: usize,
}

fn reference_neighbor(m: &Molecule, atom: usize, exclude: usize) -> Option<usize> {
    m.neighbors(atom)
        .iter()
        .map(|(v, _)| *v)
        .filter(|&v| v != exclude && m.atoms()[v].element != Element::H)
        .min()
}

fn torsion_of(m: &Molecule, c: &Conformer, bond: usize) -> Result<f64, GeomError> {
    let b = &m.bonds()[bond];
    let i = reference_neighbor(m, b.a, b.b)
        .ok_or_else(|| GeomError::Degenerate(format!("bond {bond} lacks a reference atom")))?;
    let l = reference_neighbor(m, b.b, b.a)
        .ok_or_else(|| GeomError::Degenerate(format!("bond {bond} lacks a reference atom")))?;
    dihedral_angle(c, i, b.a, b.b, l)
}

/// Torsion features for every bond. Only rotatable bonds with a usable
/// conformer get a flag of 1; everything else is (0, 0, 0).
pub fn bond_torsion_features(m: &Molecule, c: Option<&Conformer>) -> TorsionFeatures {
    let mut per_bond = vec![[0.0; 3]; m.bond_count()];
    let mut warnings = 0;
    if let Some(c) = c.filter(|c| c.len() == m.atom_count()) {
        for bond in find_rotatable_bonds(m) {
            match torsion_of(m, c, bond) {
                Ok(deg) => {
                    let t = deg.to_radians();
                    per_bond[bond] = [t.sin(), t.cos(), 1.0];
                }
                Err(_) => warnings += 1,
            }
        }
    } else if c.is_some() {
        warnings = find_rotatable_bonds(m).len();
    }
    TorsionFeatures { per_bond, warnings }
}

/// Copy of `m` with `Bond::torsion` set (degrees) on rotatable bonds.
pub fn annotate_torsions(m: &Molecule, c: &Conformer) -> Molecule {
    let mut torsions = vec![None; m.bond_count()];
    if c.len() == m.atom_count() {
        for bond in find_rotatable_bonds(m) {
            torsions[bond] = torsion_of(m, c, bond).ok();
        }
    }
    m.with_torsions(&torsions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn conf(points: &[Point]) -> Conformer {
        Conformer::new(points.to_vec()).unwrap()
    }

    #[test]
    fn planar_cases() {
        let anti = conf(&[[1.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]);
        assert_eq!(dihedral_angle(&anti, 0, 1, 2, 3).unwrap(), 180.0);
        let syn = conf(&[[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]);
        assert_eq!(dihedral_angle(&syn, 0, 1, 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn perpendicular_is_plus_ninety() {
        // b1 = (-1,0,0), b2 = (0,0,1), b3 = (0,1,0):
        // |b2| b1·(b2×b3) = 1, (b1×b2)·(b2×b3) = 0
        let c = conf(&[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 1.0]]);
        assert!((dihedral_angle(&c, 0, 1, 2, 3).unwrap() - 90.0).abs() < 1e-12);
        assert!((dihedral_angle(&c, 3, 2, 1, 0).unwrap() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let c = conf(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 1.0, 0.0]]);
        assert!(matches!(dihedral_angle(&c, 0, 1, 2, 3), Err(GeomError::Degenerate(_))));
        assert!(dihedral_angle(&c, 0, 1, 1, 3).is_err());
    }

    #[test]
    fn rotatable_counts() {
        let count = |s: &str| find_rotatable_bonds(&parse_smiles(s).unwrap()).len();
        assert_eq!(count("CCO"), 0);
        assert_eq!(count("CCCC"), 1);
        assert_eq!(count("c1ccccc1-c1ccccc1"), 1);
    }

    #[test]
    fn no_conformer_means_zero_features() {
        let m = parse_smiles("CCCC").unwrap();
        let f = bond_torsion_features(&m, None);
        assert!(f.per_bond.iter().all(|x| *x == [0.0; 3]));
        assert_eq!(f.warnings, 0);
    }
}
