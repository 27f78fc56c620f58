use lcglue_core::chem::{parse_smiles, read_smiles_lines, BondOrder};
use lcglue_core::geom::{
    bond_torsion_features, dihedral_angle, find_rotatable_bonds, kabsch_rmsd, Conformer, Point,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Rot = [[f64; 3]; 3];

fn quat_to_rot(q: [f64; 4]) -> Rot {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn random_rotation(rng: &mut impl Rng) -> Rot {
    quat_to_rot([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
}

fn centre(c: &Conformer) -> Vec<Point> {
    let n = c.len() as f64;
    let mut m = [0.0; 3];
    for p in c.coords() {
        for k in 0..3 {
            m[k] += p[k] / n;
        }
    }
    c.coords().iter().map(|p| [p[0] - m[0], p[1] - m[1], p[2] - m[2]]).collect()
}

/// RMSD minimised by direct search over unit quaternions (no SVD).
fn brute_force_rmsd(a: &Conformer, b: &Conformer) -> f64 {
    let (p, q) = (centre(a), centre(b));
    let cost = |quat: [f64; 4]| {
        let r = quat_to_rot(quat);
        let s: f64 = p
            .iter()
            .zip(&q)
            .map(|(pi, qi)| {
                (0..3)
                    .map(|i| {
                        let x = r[i][0] * pi[0] + r[i][1] * pi[1] + r[i][2] * pi[2] - qi[i];
                        x * x
                    })
                    .sum::<f64>()
            })
            .sum();
        (s / p.len() as f64).sqrt()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut best = f64::INFINITY;
    for _ in 0..24 {
        let mut qv = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let mut f = cost(qv);
        let mut step = 0.5;
        while step > 1e-12 {
            let mut improved = false;
            for k in 0..4 {
                for sgn in [1.0, -1.0] {
                    let mut t = qv;
                    t[k] += sgn * step;
                    let ft = cost(t);
                    if ft < f {
                        f = ft;
                        qv = t;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(f);
    }
    best
}

fn random_conformer(rng: &mut impl Rng, n: usize) -> Conformer {
    Conformer::new((0..n).map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect()).unwrap()
}

#[test]
fn rigid_copy_has_zero_rmsd() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let a = random_conformer(&mut rng, 12);
        let b = a.transformed(&random_rotation(&mut rng), [4.0, -2.0, 7.5]);
        assert!(kabsch_rmsd(&a, &b).unwrap() < 1e-9);
    }
}

#[test]
fn kabsch_agrees_with_rotation_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let a = random_conformer(&mut rng, 6);
        let b = random_conformer(&mut rng, 6);
        let exact = kabsch_rmsd(&a, &b).unwrap();
        let searched = brute_force_rmsd(&a, &b);
        assert!(exact <= searched + 1e-9, "{exact} > {searched}");
        assert!((exact - searched).abs() < 1e-6, "{exact} vs {searched}");
    }
}

#[test]
fn single_atom_displacement() {
    // five atoms, one moved by 1 Å; the optimum is found by direct search
    let base: Vec<Point> = vec![[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [2.0, 1.4, 0.0], [3.5, 1.5, 0.7], [4.1, 2.8, 1.1]];
    let mut moved = base.clone();
    moved[2][2] += 1.0;
    let (a, b) = (Conformer::new(base).unwrap(), Conformer::new(moved).unwrap());
    let n = 5.0_f64;
    let oracle = brute_force_rmsd(&a, &b);
    let exact = kabsch_rmsd(&a, &b).unwrap();
    assert!((exact - oracle).abs() < 1e-6);
    // frozen from the search above
    assert!((exact - 0.357_036_265_4).abs() < 1e-6, "{exact}");
    // rotation can only improve on centring alone, which gives sqrt(n-1)/n
    assert!(exact <= (n - 1.0).sqrt() / n + 1e-12);
    assert!(exact < 1.0 / n.sqrt());
}

fn ring_point(centre_x: f64, deg: f64) -> Point {
    let t = deg.to_radians();
    [centre_x + 1.4 * t.cos(), 1.4 * t.sin(), 0.0]
}

#[test]
fn biphenyl_twist() {
    let m = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
    let twist = 45.0_f64.to_radians();
    let mut coords = vec![[0.0; 3]; 12];
    for (atom, deg) in [(5, 0.0), (0, 60.0), (1, 120.0), (2, 180.0), (3, 240.0), (4, 300.0)] {
        coords[atom] = ring_point(-1.4, deg);
    }
    for (atom, deg) in [(6, 180.0), (7, 120.0), (8, 60.0), (9, 0.0), (10, 300.0), (11, 240.0)] {
        let p = ring_point(2.9, deg);
        coords[atom] = [p[0], p[1] * twist.cos() - p[2] * twist.sin(), p[1] * twist.sin() + p[2] * twist.cos()];
    }
    let c = Conformer::new(coords).unwrap();
    let f = bond_torsion_features(&m, Some(&c));
    let bond = find_rotatable_bonds(&m)[0];
    let [s, co, flag] = f.per_bond[bond];
    assert_eq!(flag, 1.0);
    assert!((s - 45f64.to_radians().sin()).abs() < 1e-9);
    assert!((co - 45f64.to_radians().cos()).abs() < 1e-9);
}

#[test]
fn butane_anti() {
    let m = parse_smiles("CCCC").unwrap();
    let c = Conformer::new(vec![[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [1.5, -1.0, 0.0]]).unwrap();
    let f = bond_torsion_features(&m, Some(&c));
    let rot = find_rotatable_bonds(&m);
    assert_eq!(rot.len(), 1);
    let [s, co, flag] = f.per_bond[rot[0]];
    assert!(s.abs() < 1e-12 && (co + 1.0).abs() < 1e-12 && flag == 1.0);
}

#[test]
fn rotatable_bonds_are_single_and_acyclic() {
    for (_, m) in read_smiles_lines(include_str!("../data/desk_corpus.smi")) {
        let m = m.unwrap();
        for b in find_rotatable_bonds(&m) {
            let bond = &m.bonds()[b];
            assert_eq!(bond.order, BondOrder::Single);
            assert!(!bond.in_ring);
        }
    }
}

proptest! {
    #[test]
    fn dihedral_invariant_under_rigid_motion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_conformer(&mut rng, 4);
        let Ok(d) = dihedral_angle(&c, 0, 1, 2, 3) else { return Ok(()); };
        let moved = c.transformed(&random_rotation(&mut rng), [rng.random_range(-9.0..9.0), 1.0, -3.0]);
        let d2 = dihedral_angle(&moved, 0, 1, 2, 3).unwrap();
        let diff = (d - d2).abs();
        prop_assert!(diff.min(360.0 - diff) < 1e-9, "{} vs {}", d, d2);
        let rev = dihedral_angle(&c, 3, 2, 1, 0).unwrap();
        prop_assert!((d.abs() - rev.abs()).abs() < 1e-9);
        prop_assert!(d > -180.0 && d <= 180.0);
    }

    #[test]
    fn rmsd_symmetric_and_non_negative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_conformer(&mut rng, 7);
        let b = random_conformer(&mut rng, 7);
        let (ab, ba) = (kabsch_rmsd(&a, &b).unwrap(), kabsch_rmsd(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-9);
    }
}
