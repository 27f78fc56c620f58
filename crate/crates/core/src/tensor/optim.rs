use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Tensor, TensorError};

/// Scales every gradient by `max_norm / ‖g‖₂` when the global norm exceeds
/// `max_norm`. Returns the norm measured before clipping.
pub fn clip_global_norm<'a>(grads: impl IntoIterator<Item = &'a mut Tensor>, max_norm: f64) -> f64 {
    let grads: Vec<&mut Tensor> = grads.into_iter().collect();
    let norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
    if norm > max_norm {
        let f = max_norm / norm;
        for g in grads {
            g.scale_in_place(f);
        }
    }
    norm
}

/// `lr(epoch) = base · decay^epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base: f64,
    pub decay: f64,
}

impl LrSchedule {
    pub fn new(base: f64) -> LrSchedule {
        LrSchedule { base, decay: 0.9 }
    }

    pub fn at(&self, epoch: u64) -> f64 {
        self.base * self.decay.powi(epoch.min(i32::MAX as u64) as i32)
    }
}

/// Bias-corrected Adam with per-parameter moments keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: BTreeMap<String, Tensor>,
    pub v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(lr: f64) -> AdamState {
        AdamState { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: BTreeMap::new(), v: BTreeMap::new() }
    }

    /// One update of every parameter that has a gradient. Moments are created
    /// lazily as zeros.
    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Tensor>,
        grads: &BTreeMap<String, Tensor>,
    ) -> Result<(), TensorError> {
        for (name, g) in grads {
            let p = params.get(name).ok_or_else(|| TensorError::Invalid {
                op: "adam",
                msg: format!("gradient for unknown parameter {name}"),
            })?;
            if p.shape() != g.shape() {
                return Err(TensorError::Shape { op: "adam", left: p.shape(), right: g.shape() });
            }
            for moments in [&self.m, &self.v] {
                if let Some(s) = moments.get(name) {
                    if s.shape() != p.shape() {
                        return Err(TensorError::Shape { op: "adam", left: p.shape(), right: s.shape() });
                    }
                }
            }
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (name, g) in grads {
            let p = params.get_mut(name).expect("checked above");
            let (r, c) = p.shape();
            let m = self.m.entry(name.clone()).or_insert_with(|| Tensor::zeros(r, c));
            let v = self.v.entry(name.clone()).or_insert_with(|| Tensor::zeros(r, c));
            for i in 0..g.data().len() {
                let gi = g.data()[i];
                let mi = self.beta1 * m.data()[i] + (1.0 - self.beta1) * gi;
                let vi = self.beta2 * v.data()[i] + (1.0 - self.beta2) * gi * gi;
                m.data_mut()[i] = mi;
                v.data_mut()[i] = vi;
                let step = self.lr * (mi / c1) / ((vi / c2).sqrt() + self.eps);
                p.data_mut()[i] -= step;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(name: &str, t: Tensor) -> BTreeMap<String, Tensor> {
        BTreeMap::from([(name.to_string(), t)])
    }

    #[test]
    fn clip_halves_norm_100() {
        let mut g = Tensor::row(&[60.0, 80.0]);
        let pre = clip_global_norm([&mut g], 50.0);
        assert_eq!(pre, 100.0);
        assert!((g.norm_squared().sqrt() - 50.0).abs() < 1e-12);
        assert_eq!(g.data(), &[30.0, 40.0]);
    }

    #[test]
    fn clip_leaves_small_and_zero() {
        let mut g = Tensor::row(&[6.0, 8.0]);
        assert_eq!(clip_global_norm([&mut g], 50.0), 10.0);
        assert_eq!(g.data(), &[6.0, 8.0]);
        let mut z = Tensor::zeros(2, 2);
        assert_eq!(clip_global_norm([&mut z], 50.0), 0.0);
        assert_eq!(z, Tensor::zeros(2, 2));
    }

    #[test]
    fn adam_first_step() {
        let mut params = single("w", Tensor::scalar(0.0));
        let mut adam = AdamState::new(1e-3);
        adam.step(&mut params, &single("w", Tensor::scalar(1.0))).unwrap();
        let delta = params["w"].item();
        // m̂ = v̂ = 1 after bias correction
        assert!((delta - (-1e-3 / (1.0 + 1e-8))).abs() < 1e-15, "{delta}");
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut params = single("w", Tensor::row(&[1.5, -2.0]));
        let mut adam = AdamState::new(1e-3);
        for _ in 0..5 {
            adam.step(&mut params, &single("w", Tensor::zeros(1, 2))).unwrap();
        }
        assert_eq!(params["w"].data(), &[1.5, -2.0]);
    }

    #[test]
    fn adam_rejects_shape_mismatch() {
        let mut params = single("w", Tensor::zeros(2, 2));
        let mut adam = AdamState::new(1e-3);
        assert!(adam.step(&mut params, &single("w", Tensor::zeros(1, 2))).is_err());
        assert_eq!(adam.t, 0);
    }

    #[test]
    fn schedule_decreases() {
        let s = LrSchedule::new(1e-3);
        assert_eq!(s.at(0), 1e-3);
        for e in 0..200 {
            assert!(s.at(e + 1) < s.at(e));
        }
    }
}
