use super::{Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Second operand may be a single row broadcast over the first's rows.
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Slice { src: Var, row0: usize, col0: usize },
    Transpose(Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Mean(Var),
    Sum(Var),
    SumRows(Var),
    Softmax(Var),
    SoftmaxCrossEntropy { logits: Var, targets: Vec<usize>, probs: Tensor },
    BinaryCrossEntropy { logits: Var, targets: Vec<f64> },
    GatherRows { src: Var, idx: Vec<usize> },
    SegmentSum { src: Var, seg: Vec<usize> },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records primitive applications in execution order, so every node's
/// inputs precede it.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients indexed by [`Var`]; `None` for values that need no gradient.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of `v`, or zeros of its shape if nothing flowed into it.
    pub fn get(&self, tape: &Tape, v: Var) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(v).shape();
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, tape: &Tape, v: Var) -> Tensor {
        match self.grads[v.0].take() {
            Some(g) => g,
            None => {
                let (r, c) = tape.value(v).shape();
                Tensor::zeros(r, c)
            }
        }
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::Shape { op, left: a.shape(), right: b.shape() }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Which ReLU inputs were positive, in recording order. Two evaluations
    /// with equal patterns lie on the same linear piece of every ReLU.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let Op::Relu(a) = node.op {
                out.extend(self.nodes[a.0].value.data().iter().map(|x| *x > 0.0));
            }
        }
        out
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node { value: t, op: Op::Leaf, requires_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node { value: t, op: Op::Leaf, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        let out = if x.shape() == y.shape() {
            x.zip_map(y, |p, q| p + q)
        } else if y.rows() == 1 && y.cols() == x.cols() {
            let mut out = x.clone();
            for r in 0..x.rows() {
                for c in 0..x.cols() {
                    out.set(r, c, x.get(r, c) + y.get(0, c));
                }
            }
            out
        } else {
            return Err(shape_err("add", x, y));
        };
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("sub", x, y));
        }
        let out = x.zip_map(y, |p, q| p - q);
        Ok(self.push(out, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("mul", x, y));
        }
        let out = x.zip_map(y, |p, q| p * q);
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, f: f64) -> Result<Var, TensorError> {
        let out = self.value(a).map(|x| x * f);
        Ok(self.push(out, Op::Scale(a, f), &[a]))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var, TensorError> {
        let out = self.value(a).map(|x| x + c);
        Ok(self.push(out, Op::AddScalar(a), &[a]))
    }

    /// Concatenate along rows (`axis = 0`) or columns (`axis = 1`).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, TensorError> {
        let first = parts.first().ok_or(TensorError::Invalid {
            op: "concat",
            msg: "no inputs".into(),
        })?;
        let base = self.value(*first).clone();
        let out = match axis {
            0 => {
                let mut data = Vec::new();
                let mut rows = 0;
                for p in parts {
                    let t = self.value(*p);
                    if t.cols() != base.cols() {
                        return Err(shape_err("concat", &base, t));
                    }
                    rows += t.rows();
                    data.extend_from_slice(t.data());
                }
                Tensor::new(rows, base.cols(), data)?
            }
            1 => {
                let mut cols = 0;
                for p in parts {
                    let t = self.value(*p);
                    if t.rows() != base.rows() {
                        return Err(shape_err("concat", &base, t));
                    }
                    cols += t.cols();
                }
                let mut out = Tensor::zeros(base.rows(), cols);
                let mut offset = 0;
                for p in parts {
                    let t = self.value(*p);
                    for r in 0..t.rows() {
                        for c in 0..t.cols() {
                            out.set(r, offset + c, t.get(r, c));
                        }
                    }
                    offset += t.cols();
                }
                out
            }
            _ => {
                return Err(TensorError::Invalid { op: "concat", msg: format!("axis {axis}") });
            }
        };
        Ok(self.push(out, Op::Concat { parts: parts.to_vec(), axis }, parts))
    }

    /// Sub-block `[row0, row0 + rows) x [col0, col0 + cols)`.
    pub fn slice(&mut self, a: Var, row0: usize, rows: usize, col0: usize, cols: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        if row0 + rows > x.rows() || col0 + cols > x.cols() {
            return Err(TensorError::Invalid {
                op: "slice",
                msg: format!("[{row0}+{rows}, {col0}+{cols}] outside {:?}", x.shape()),
            });
        }
        let mut out = Tensor::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out.set(r, c, x.get(row0 + r, col0 + c));
            }
        }
        Ok(self.push(out, Op::Slice { src: a, row0, col0 }, &[a]))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).transpose();
        Ok(self.push(out, Op::Transpose(a), &[a]))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).map(|x| x.max(0.0));
        Ok(self.push(out, Op::Relu(a), &[a]))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).map(sigmoid);
        Ok(self.push(out, Op::Sigmoid(a), &[a]))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).map(f64::tanh);
        Ok(self.push(out, Op::Tanh(a), &[a]))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = self.value(a).map(f64::exp);
        Ok(self.push(out, Op::Exp(a), &[a]))
    }

    /// Mean of all entries, as 1x1.
    pub fn mean(&mut self, a: Var) -> Result<Var, TensorError> {
        let x = self.value(a);
        if x.data().is_empty() {
            return Err(TensorError::Invalid { op: "mean", msg: "empty tensor".into() });
        }
        let out = Tensor::scalar(x.data().iter().sum::<f64>() / x.data().len() as f64);
        Ok(self.push(out, Op::Mean(a), &[a]))
    }

    /// Sum of all entries, as 1x1.
    pub fn sum(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = Tensor::scalar(self.value(a).data().iter().sum());
        Ok(self.push(out, Op::Sum(a), &[a]))
    }

    /// Column sums, as 1 x cols.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let x = self.value(a);
        let mut out = Tensor::zeros(1, x.cols());
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.data_mut()[c] += x.get(r, c);
            }
        }
        Ok(self.push(out, Op::SumRows(a), &[a]))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Result<Var, TensorError> {
        let out = row_softmax(self.value(a));
        Ok(self.push(out, Op::Softmax(a), &[a]))
    }

    /// Σ over rows of −log softmax(logits[row])[targets[row]], as 1x1.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var, TensorError> {
        let x = self.value(logits);
        if targets.len() != x.rows() {
            return Err(TensorError::Invalid {
                op: "softmax_cross_entropy",
                msg: format!("{} targets for {} rows", targets.len(), x.rows()),
            });
        }
        if let Some(t) = targets.iter().find(|t| **t >= x.cols()) {
            return Err(TensorError::Invalid {
                op: "softmax_cross_entropy",
                msg: format!("target {t} outside {} classes", x.cols()),
            });
        }
        let mut loss = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            let row = x.row_slice(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += lse - row[t];
        }
        let probs = row_softmax(x);
        let op = Op::SoftmaxCrossEntropy { logits, targets: targets.to_vec(), probs };
        Ok(self.push(Tensor::scalar(loss), op, &[logits]))
    }

    /// Σ of element-wise binary cross-entropy on logits against 0/1 targets
    /// (row-major order), as 1x1.
    pub fn binary_cross_entropy(&mut self, logits: Var, targets: &[f64]) -> Result<Var, TensorError> {
        let x = self.value(logits);
        if targets.len() != x.data().len() {
            return Err(TensorError::Invalid {
                op: "binary_cross_entropy",
                msg: format!("{} targets for {} logits", targets.len(), x.data().len()),
            });
        }
        let loss: f64 = x
            .data()
            .iter()
            .zip(targets)
            .map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
            .sum();
        let op = Op::BinaryCrossEntropy { logits, targets: targets.to_vec() };
        Ok(self.push(Tensor::scalar(loss), op, &[logits]))
    }

    /// Rows of `a` picked by `idx` (repeats allowed).
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let x = self.value(a);
        if let Some(i) = idx.iter().find(|i| **i >= x.rows()) {
            return Err(TensorError::Invalid {
                op: "gather_rows",
                msg: format!("row {i} outside {} rows", x.rows()),
            });
        }
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx {
            data.extend_from_slice(x.row_slice(i));
        }
        let out = Tensor::new(idx.len(), x.cols(), data)?;
        Ok(self.push(out, Op::GatherRows { src: a, idx: idx.to_vec() }, &[a]))
    }

    /// `out[seg[i]] += a[i]` over rows, with `n_out` output rows.
    pub fn segment_sum(&mut self, a: Var, seg: &[usize], n_out: usize) -> Result<Var, TensorError> {
        let x = self.value(a);
        if seg.len() != x.rows() || seg.iter().any(|s| *s >= n_out) {
            return Err(TensorError::Invalid {
                op: "segment_sum",
                msg: format!("{} segment ids for {} rows into {n_out}", seg.len(), x.rows()),
            });
        }
        let mut out = Tensor::zeros(n_out, x.cols());
        for (r, &s) in seg.iter().enumerate() {
            for c in 0..x.cols() {
                let v = out.get(s, c) + x.get(r, c);
                out.set(s, c, v);
            }
        }
        Ok(self.push(out, Op::SegmentSum { src: a, seg: seg.to_vec() }, &[a]))
    }

    /// `x · W + b` with `b` a single row.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var, TensorError> {
        let xw = self.matmul(x, w)?;
        self.add(xw, b)
    }

    /// Reverse-mode accumulation from a 1x1 `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, TensorError> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(TensorError::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                if self.requires_grad(*a) {
                    let ga = g.matmul(&y.transpose()).expect("shapes checked forward");
                    self.accumulate(grads, *a, ga);
                }
                if self.requires_grad(*b) {
                    let gb = x.transpose().matmul(g).expect("shapes checked forward");
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                let y = self.value(*b);
                if y.shape() == g.shape() {
                    self.accumulate(grads, *b, g.clone());
                } else {
                    let mut gb = Tensor::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            gb.data_mut()[c] += g.get(r, c);
                        }
                    }
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, g.zip_map(y, |p, q| p * q));
                self.accumulate(grads, *b, g.zip_map(x, |p, q| p * q));
            }
            Op::Scale(a, f) => self.accumulate(grads, *a, g.map(|x| x * f)),
            Op::AddScalar(a) => self.accumulate(grads, *a, g.clone()),
            Op::Concat { parts, axis } => {
                let mut offset = 0;
                for p in parts {
                    let (r, c) = self.value(*p).shape();
                    let mut gp = Tensor::zeros(r, c);
                    for i in 0..r {
                        for j in 0..c {
                            let v = if *axis == 0 { g.get(offset + i, j) } else { g.get(i, offset + j) };
                            gp.set(i, j, v);
                        }
                    }
                    offset += if *axis == 0 { r } else { c };
                    self.accumulate(grads, *p, gp);
                }
            }
            Op::Slice { src, row0, col0 } => {
                let (r, c) = self.value(*src).shape();
                let mut gs = Tensor::zeros(r, c);
                for i in 0..g.rows() {
                    for j in 0..g.cols() {
                        gs.set(row0 + i, col0 + j, g.get(i, j));
                    }
                }
                self.accumulate(grads, *src, gs);
            }
            Op::Transpose(a) => self.accumulate(grads, *a, g.transpose()),
            Op::Relu(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, g.zip_map(x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
            }
            Op::Sigmoid(a) => self.accumulate(grads, *a, g.zip_map(out, |gv, s| gv * s * (1.0 - s))),
            Op::Tanh(a) => self.accumulate(grads, *a, g.zip_map(out, |gv, t| gv * (1.0 - t * t))),
            Op::Exp(a) => self.accumulate(grads, *a, g.zip_map(out, |gv, e| gv * e)),
            Op::Mean(a) => {
                let (r, c) = self.value(*a).shape();
                self.accumulate(grads, *a, Tensor::filled(r, c, g.item() / (r * c) as f64));
            }
            Op::Sum(a) => {
                let (r, c) = self.value(*a).shape();
                self.accumulate(grads, *a, Tensor::filled(r, c, g.item()));
            }
            Op::SumRows(a) => {
                let (r, c) = self.value(*a).shape();
                let mut ga = Tensor::zeros(r, c);
                for i in 0..r {
                    for j in 0..c {
                        ga.set(i, j, g.get(0, j));
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::Softmax(a) => {
                let mut ga = Tensor::zeros(out.rows(), out.cols());
                for r in 0..out.rows() {
                    let dot: f64 = (0..out.cols()).map(|c| g.get(r, c) * out.get(r, c)).sum();
                    for c in 0..out.cols() {
                        ga.set(r, c, out.get(r, c) * (g.get(r, c) - dot));
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::SoftmaxCrossEntropy { logits, targets, probs } => {
                let mut ga = probs.clone();
                for (r, &t) in targets.iter().enumerate() {
                    let v = ga.get(r, t) - 1.0;
                    ga.set(r, t, v);
                }
                ga.scale_in_place(g.item());
                self.accumulate(grads, *logits, ga);
            }
            Op::BinaryCrossEntropy { logits, targets } => {
                let x = self.value(*logits);
                let mut ga = x.clone();
                for (v, &y) in ga.data_mut().iter_mut().zip(targets) {
                    *v = (sigmoid(*v) - y) * g.item();
                }
                self.accumulate(grads, *logits, ga);
            }
            Op::GatherRows { src, idx } => {
                let (r, c) = self.value(*src).shape();
                let mut gs = Tensor::zeros(r, c);
                for (k, &i) in idx.iter().enumerate() {
                    for j in 0..c {
                        let v = gs.get(i, j) + g.get(k, j);
                        gs.set(i, j, v);
                    }
                }
                self.accumulate(grads, *src, gs);
            }
            Op::SegmentSum { src, seg } => {
                let c = g.cols();
                let mut gs = Tensor::zeros(seg.len(), c);
                for (k, &s) in seg.iter().enumerate() {
                    for j in 0..c {
                        gs.set(k, j, g.get(s, j));
                    }
                }
                self.accumulate(grads, *src, gs);
            }
        }
    }
}

pub(crate) fn row_softmax(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for r in 0..x.rows() {
        let row = x.row_slice(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (c, e) in exps.iter().enumerate() {
            out.set(r, c, e / total);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_forward() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(&[-1.0, 2.0]));
        let y = t.relu(x).unwrap();
        assert_eq!(t.value(y).data(), &[0.0, 2.0]);
    }

    #[test]
    fn uniform_cross_entropy_is_ln3() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(&[0.0, 0.0, 0.0]));
        let l = t.softmax_cross_entropy(x, &[1]).unwrap();
        assert!((t.value(l).item() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mean_of_squares_gradient() {
        let mut t = Tape::new();
        let x = t.param(Tensor::row(&[1.0, 2.0]));
        let sq = t.mul(x, x).unwrap();
        let l = t.mean(sq).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(&t, x).data(), &[1.0, 2.0]);
    }

    #[test]
    fn unused_parameter_has_zero_gradient() {
        let mut t = Tape::new();
        let x = t.param(Tensor::row(&[1.0, 2.0]));
        let p = t.param(Tensor::row(&[5.0]));
        let l = t.sum(x).unwrap();
        let g = t.backward(l).unwrap();
        assert_eq!(g.get(&t, p).data(), &[0.0]);
    }

    #[test]
    fn shape_errors_name_the_shapes() {
        let mut t = Tape::new();
        let a = t.constant(Tensor::zeros(2, 3));
        let b = t.constant(Tensor::zeros(2, 3));
        let err = t.matmul(a, b).unwrap_err();
        assert!(err.to_string().contains("(2, 3)"), "{err}");
        let l = t.add(a, b).unwrap();
        assert!(matches!(t.backward(l), Err(TensorError::NonScalarLoss((2, 3)))));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::new(2, 3, vec![1.0, 2.0, 3.0, -50.0, 0.0, 50.0]).unwrap());
        let s = t.softmax(x).unwrap();
        for r in 0..2 {
            let total: f64 = t.value(s).row_slice(r).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
