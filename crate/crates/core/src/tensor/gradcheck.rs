use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor, TensorError, Var};

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// `(input, flat index)` of the worst entry.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

/// Magnitudes below this are compared absolutely, so entries whose true
/// gradient is ~0 do not turn round-off into a large relative error.
const REL_FLOOR: f64 = 1e-3;

/// Compares the tape gradient of `f(inputs)` with central differences of
/// step `h` over every input entry. `f` must build a 1x1 loss.
pub fn finite_difference_check<F>(f: F, inputs: &[Tensor], h: f64) -> Result<GradCheck, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    let eval = |values: &[Tensor]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.constant(t.clone())).collect();
        let loss = f(&mut tape, &vars)?;
        Ok(tape.value(loss).item())
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut out = GradCheck { max_rel_error: 0.0, worst: (0, 0), analytic: 0.0, numeric: 0.0 };
    let mut work = inputs.to_vec();
    for (i, v) in vars.iter().enumerate() {
        let g = grads.get(&tape, *v);
        for k in 0..inputs[i].data().len() {
            let x = inputs[i].data()[k];
            work[i].data_mut()[k] = x + h;
            let up = eval(&work)?;
            work[i].data_mut()[k] = x - h;
            let down = eval(&work)?;
            work[i].data_mut()[k] = x;
            let numeric = (up - down) / (2.0 * h);
            let analytic = g.data()[k];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
            if rel > out.max_rel_error || (k == 0 && i == 0) {
                out = GradCheck { max_rel_error: rel, worst: (i, k), analytic, numeric };
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_agrees() {
        let x = Tensor::row(&[0.3, -1.2, 2.0]);
        let r = finite_difference_check(
            |t, v| {
                let sq = t.mul(v[0], v[0])?;
                t.sum(sq)
            },
            &[x],
            1e-4,
        )
        .unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // constant() blocks gradient flow, so the analytic side is 0
        let x = Tensor::row(&[1.0]);
        let r = finite_difference_check(
            |t, v| {
                let c = t.constant(t.value(v[0]).clone());
                let y = t.mul(c, c)?;
                let zero = t.scale(v[0], 0.0)?;
                let s = t.add(y, zero)?;
                t.sum(s)
            },
            &[x],
            1e-4,
        )
        .unwrap();
        assert!(r.max_rel_error > 0.5);
    }
}

/// Result of auditing one primitive over random shapes and values.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveAudit {
    pub name: &'static str,
    pub trials: usize,
    pub max_rel_error: f64,
}

pub const PRIMITIVE_NAMES: [&str; 22] = [
    "matmul", "add", "add_row", "sub", "mul", "scale", "concat_rows", "concat_cols", "slice",
    "transpose", "relu", "sigmoid", "tanh", "exp", "mean", "sum", "sum_rows", "softmax",
    "softmax_cross_entropy", "binary_cross_entropy", "gather_rows", "segment_sum",
];

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    // kept away from 0 so relu stays differentiable at every probe
    let data = (0..rows * cols)
        .map(|_| {
            let mag = rng.random_range(0.05..1.5);
            if rng.random_bool(0.5) { mag } else { -mag }
        })
        .collect();
    Tensor::new(rows, cols, data).expect("sized")
}

/// Runs `trials` finite-difference checks per primitive on random shapes.
/// Non-scalar outputs are reduced through a fixed random weighting so every
/// output entry carries a distinct upstream gradient.
pub fn audit_primitives(trials: usize, seed: u64) -> Result<Vec<PrimitiveAudit>, TensorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in PRIMITIVE_NAMES {
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let (r, c, k) = (rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..5));
            let a = random_tensor(&mut rng, r, c);
            let (inputs, extra): (Vec<Tensor>, Vec<usize>) = match name {
                "matmul" => (vec![a, random_tensor(&mut rng, c, k)], vec![]),
                "add" | "sub" | "mul" => (vec![a, random_tensor(&mut rng, r, c)], vec![]),
                "add_row" => (vec![a, random_tensor(&mut rng, 1, c)], vec![]),
                "concat_rows" => (vec![a, random_tensor(&mut rng, k, c)], vec![]),
                "concat_cols" => (vec![a, random_tensor(&mut rng, r, k)], vec![]),
                "slice" => {
                    let (r0, c0) = (rng.random_range(0..r), rng.random_range(0..c));
                    let (nr, nc) = (rng.random_range(1..=r - r0), rng.random_range(1..=c - c0));
                    (vec![a], vec![r0, nr, c0, nc])
                }
                "softmax_cross_entropy" => (vec![a], (0..r).map(|_| rng.random_range(0..c)).collect()),
                "binary_cross_entropy" => (vec![a], (0..r * c).map(|_| rng.random_range(0..2)).collect()),
                "gather_rows" => (vec![a], (0..k + 1).map(|_| rng.random_range(0..r)).collect()),
                "segment_sum" => {
                    let mut seg: Vec<usize> = (0..r).map(|_| rng.random_range(0..k)).collect();
                    seg.push(k);
                    (vec![a], seg)
                }
                _ => (vec![a], vec![]),
            };
            let scale_by = rng.random_range(-2.0..2.0);
            let weight_seed: u64 = rng.random();
            let f = |t: &mut Tape, v: &[Var]| -> Result<Var, TensorError> {
                let y = match name {
                    "matmul" => t.matmul(v[0], v[1])?,
                    "add" | "add_row" => t.add(v[0], v[1])?,
                    "sub" => t.sub(v[0], v[1])?,
                    "mul" => t.mul(v[0], v[1])?,
                    "scale" => t.scale(v[0], scale_by)?,
                    "concat_rows" => t.concat(&[v[0], v[1]], 0)?,
                    "concat_cols" => t.concat(&[v[0], v[1]], 1)?,
                    "slice" => t.slice(v[0], extra[0], extra[1], extra[2], extra[3])?,
                    "transpose" => t.transpose(v[0])?,
                    "relu" => t.relu(v[0])?,
                    "sigmoid" => t.sigmoid(v[0])?,
                    "tanh" => t.tanh(v[0])?,
                    "exp" => t.exp(v[0])?,
                    "mean" => t.mean(v[0])?,
                    "sum" => t.sum(v[0])?,
                    "sum_rows" => t.sum_rows(v[0])?,
                    "softmax" => t.softmax(v[0])?,
                    "softmax_cross_entropy" => t.softmax_cross_entropy(v[0], &extra)?,
                    "binary_cross_entropy" => {
                        let y: Vec<f64> = extra.iter().map(|b| *b as f64).collect();
                        t.binary_cross_entropy(v[0], &y)?
                    }
                    "gather_rows" => t.gather_rows(v[0], &extra)?,
                    "segment_sum" => {
                        let n_out = extra[extra.len() - 1];
                        t.segment_sum(v[0], &extra[..extra.len() - 1], n_out)?
                    }
                    other => unreachable!("unknown primitive {other}"),
                };
                let (yr, yc) = t.value(y).shape();
                let mut wrng = ChaCha8Rng::seed_from_u64(weight_seed);
                let w = t.constant(random_tensor(&mut wrng, yr, yc));
                let weighted = t.mul(y, w)?;
                t.sum(weighted)
            };
            worst = worst.max(finite_difference_check(f, &inputs, 1e-4)?.max_rel_error);
        }
        out.push(PrimitiveAudit { name, trials, max_rel_error: worst });
    }
    Ok(out)
}
