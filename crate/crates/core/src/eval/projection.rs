use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

impl std::str::FromStr for ProjectionMethod {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Self::Pca),
            "tsne" | "t-sne" => Ok(Self::Tsne),
            other => Err(EvalError::Parameters(format!("unknown projection method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub method: ProjectionMethod,
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { method: ProjectionMethod::Pca, perplexity: 15.0, iterations: 500, seed: 0 }
    }
}

fn check(points: &[Vec<f64>]) -> Result<usize, EvalError> {
    if points.len() < 3 {
        return Err(EvalError::TooFewPoints(points.len()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(EvalError::Ragged);
    }
    Ok(dim)
}

pub fn project_2d(points: &[Vec<f64>], cfg: &ProjectionConfig) -> Result<Vec<[f64; 2]>, EvalError> {
    match cfg.method {
        ProjectionMethod::Pca => pca_2d(points),
        ProjectionMethod::Tsne => tsne_2d(points, cfg.perplexity, cfg.iterations, cfg.seed),
    }
}

/// Scores on the top two principal axes, via the Gram matrix of the centred
/// data so the cost scales with the point count rather than the bit width.
/// Each axis is signed so its largest-magnitude score is positive.
pub fn pca_2d(points: &[Vec<f64>]) -> Result<Vec<[f64; 2]>, EvalError> {
    let dim = check(points)?;
    let n = points.len();
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n as f64;
        }
    }
    let centred = DMatrix::from_fn(n, dim, |i, j| points[i][j] - mean[j]);
    let gram = &centred * centred.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    // rounding noise in a rank-deficient Gram matrix is not a direction
    let floor = eig.eigenvalues[order[0]].abs() * 1e-12;
    let mut out = vec![[0.0; 2]; n];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[k];
        let scale = if lambda > floor { lambda.sqrt() } else { 0.0 };
        let col = eig.eigenvectors.column(k);
        let pivot = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a))).unwrap();
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[i][axis] = sign * scale * col[i];
        }
    }
    Ok(out)
}

/// Row-conditional affinities with each row's entropy matched to
/// ln(perplexity) by bisection on the precision.
fn conditional_affinities(d2: &[Vec<f64>], perplexity: f64) -> Vec<Vec<f64>> {
    let n = d2.len();
    let target = perplexity.ln();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (mut lo, mut hi, mut beta) = (0.0f64, f64::INFINITY, 1.0f64);
        let dmin = (0..n).filter(|&j| j != i).map(|j| d2[i][j]).fold(f64::INFINITY, f64::min);
        for _ in 0..100 {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                if j == i {
                    p[i][j] = 0.0;
                    continue;
                }
                // shift by the nearest distance so the largest weight is 1
                let w = (-beta * (d2[i][j] - dmin)).exp();
                p[i][j] = w;
                sum += w;
                weighted += w * (d2[i][j] - dmin);
            }
            let entropy = sum.ln() + beta * weighted / sum;
            for v in p[i].iter_mut() {
                *v /= sum;
            }
            if (entropy - target).abs() < 1e-6 {
                break;
            }
            if entropy > target {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
    }
    p
}

/// Exact t-SNE with early exaggeration and momentum, deterministic for a seed.
pub fn tsne_2d(points: &[Vec<f64>], perplexity: f64, iterations: usize, seed: u64) -> Result<Vec<[f64; 2]>, EvalError> {
    check(points)?;
    let n = points.len();
    let limit = (n as f64 - 1.0) / 3.0;
    if !(perplexity > 0.0 && perplexity < limit) {
        return Err(EvalError::Perplexity { perplexity, limit });
    }
    let d2: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()).collect())
        .collect();
    let cond = conditional_affinities(&d2, perplexity);
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(1e-12);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let learning_rate = 200.0;
    let exaggerate_for = (iterations / 4).min(100);
    let mut q = vec![vec![0.0; n]; n];
    for it in 0..iterations {
        let exaggeration = if it < exaggerate_for { 12.0 } else { 1.0 };
        let momentum = if it < 250 { 0.5 } else { 0.8 };
        let mut z = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let dx = y[i][0] - y[j][0];
                    let dy = y[i][1] - y[j][1];
                    q[i][j] = 1.0 / (1.0 + dx * dx + dy * dy);
                    z += q[i][j];
                }
            }
        }
        for i in 0..n {
            let mut grad = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let coeff = 4.0 * (exaggeration * p[i][j] - q[i][j] / z) * q[i][j];
                grad[0] += coeff * (y[i][0] - y[j][0]);
                grad[1] += coeff * (y[i][1] - y[j][1]);
            }
            for k in 0..2 {
                gains[i][k] = if (grad[k] > 0.0) != (velocity[i][k] > 0.0) {
                    gains[i][k] + 0.2
                } else {
                    (gains[i][k] * 0.8).max(0.01)
                };
                velocity[i][k] = momentum * velocity[i][k] - learning_rate * gains[i][k] * grad[k];
            }
        }
        for i in 0..n {
            y[i][0] += velocity[i][0];
            y[i][1] += velocity[i][1];
        }
        let (mx, my) = y.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0] / n as f64, b + p[1] / n as f64));
        for p in y.iter_mut() {
            p[0] -= mx;
            p[1] -= my;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{circular_fingerprint, parse_smiles};

    #[test]
    fn collinear_points_land_on_the_first_axis() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 2.0 * i as f64, 0.0]).collect();
        let proj = pca_2d(&pts).unwrap();
        for (i, p) in proj.iter().enumerate() {
            assert!(p[1].abs() < 1e-9);
            let expected = (i as f64 - 2.0) * 5f64.sqrt();
            assert!((p[0].abs() - expected.abs()).abs() < 1e-9, "{p:?} vs {expected}");
        }
        // sign convention: largest-magnitude score positive; ties go to the lowest index
        assert!(proj[0][0] > 0.0);
    }

    #[test]
    fn argument_errors() {
        let two = vec![vec![0.0], vec![1.0]];
        assert_eq!(pca_2d(&two), Err(EvalError::TooFewPoints(2)));
        let ragged = vec![vec![0.0], vec![1.0], vec![1.0, 2.0]];
        assert_eq!(pca_2d(&ragged), Err(EvalError::Ragged));
        let ten: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        assert!(matches!(tsne_2d(&ten, 3.0, 10, 0), Err(EvalError::Perplexity { .. })));
        assert!(tsne_2d(&ten, 2.9, 10, 0).is_ok());
    }

    fn fingerprints(smiles: &[&str]) -> Vec<Vec<f64>> {
        smiles
            .iter()
            .map(|s| circular_fingerprint(&parse_smiles(s).unwrap(), 2, 256).to_f64())
            .collect()
    }

    #[test]
    fn tsne_separates_chemotypes_and_is_deterministic() {
        let alkanes = ["CCCC", "CCCCC", "CCCCCC", "CC(C)CC", "CCCCCCC", "CC(C)C(C)C", "CCCCCCCC", "CC(C)(C)C"];
        let aromatics = [
            "c1ccc2ccccc2c1",
            "c1ccc2cc3ccccc3cc2c1",
            "c1ccc2c(c1)ccc1ccccc12",
            "c1ccc(cc1)-c1ccccc1",
            "Cc1ccc2ccccc2c1",
            "c1cc2ccc3cccc4ccc(c1)c2c34",
            "Cc1ccccc1-c1ccccc1",
            "c1ccc2ccc3ccccc3c2c1",
        ];
        let all: Vec<&str> = alkanes.iter().chain(aromatics.iter()).copied().collect();
        let pts = fingerprints(&all);
        let a = tsne_2d(&pts, 4.0, 400, 7).unwrap();
        let b = tsne_2d(&pts, 4.0, 400, 7).unwrap();
        assert_eq!(a, b);
        let centroid = |r: std::ops::Range<usize>| {
            let k = r.len() as f64;
            r.fold([0.0, 0.0], |c, i| [c[0] + a[i][0] / k, c[1] + a[i][1] / k])
        };
        let (ca, cb) = (centroid(0..8), centroid(8..16));
        // every point is nearer its own chemotype's centroid
        for (i, p) in a.iter().enumerate() {
            let da = (p[0] - ca[0]).hypot(p[1] - ca[1]);
            let db = (p[0] - cb[0]).hypot(p[1] - cb[1]);
            assert_eq!(i < 8, da < db, "point {i} ({})", all[i]);
        }
        let pca = pca_2d(&pts).unwrap();
        assert_eq!(pca, pca_2d(&pts).unwrap());
    }
}
