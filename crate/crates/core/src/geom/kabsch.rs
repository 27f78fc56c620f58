use nalgebra::{Matrix3, Vector3};

use super::{Conformer, GeomError};

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Proper rotation taking centred `a` onto centred `b`.
    pub rotation: [[f64; 3]; 3],
    pub rmsd: f64,
}

fn centred(c: &Conformer) -> (Vec<Vector3<f64>>, Vector3<f64>) {
    let pts: Vec<Vector3<f64>> = c.coords().iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect();
    let centroid = pts.iter().fold(Vector3::zeros(), |acc, p| acc + p) / pts.len() as f64;
    (pts.iter().map(|p| p - centroid).collect(), centroid)
}

/// Optimal superposition of `a` onto `b` (same atom order).
pub fn kabsch_align(a: &Conformer, b: &Conformer) -> Result<Alignment, GeomError> {
    if a.len() != b.len() {
        return Err(GeomError::SizeMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(GeomError::Degenerate("no atoms to align".into()));
    }
    let (p, _) = centred(a);
    let (q, _) = centred(b);
    let mut h = Matrix3::zeros();
    for (pi, qi) in p.iter().zip(&q) {
        h += pi * qi.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let r = v * fix * u.transpose();
    let sq: f64 = p.iter().zip(&q).map(|(pi, qi)| (r * pi - qi).norm_squared()).sum();
    let mut rotation = [[0.0; 3]; 3];
    for (i, row) in rotation.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = r[(i, j)];
        }
    }
    Ok(Alignment { rotation, rmsd: (sq / p.len() as f64).max(0.0).sqrt() })
}

/// Minimal RMSD over rigid rotations and translations, in Ångström.
pub fn kabsch_rmsd(a: &Conformer, b: &Conformer) -> Result<f64, GeomError> {
    kabsch_align(a, b).map(|al| al.rmsd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Conformer {
        Conformer::new(vec![
            [0.0, 0.0, 0.0],
            [1.5, 0.0, 0.0],
            [2.0, 1.4, 0.0],
            [3.5, 1.5, 0.7],
            [4.1, 2.8, 1.1],
        ])
        .unwrap()
    }

    #[test]
    fn self_rmsd_is_zero() {
        assert!(kabsch_rmsd(&tetra(), &tetra()).unwrap() < 1e-12);
    }

    #[test]
    fn mirror_image_is_not_superimposable() {
        let a = tetra();
        let mirror = a.transformed(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]], [0.0; 3]);
        assert!(kabsch_rmsd(&a, &mirror).unwrap() > 1e-3);
    }

    #[test]
    fn size_mismatch() {
        let b = Conformer::new(vec![[0.0; 3]]).unwrap();
        assert!(matches!(kabsch_rmsd(&tetra(), &b), Err(GeomError::SizeMismatch(5, 1))));
    }
}
