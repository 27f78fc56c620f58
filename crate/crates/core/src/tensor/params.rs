use std::collections::BTreeMap;

use super::{Gradients, Tape, Tensor, TensorError, Var};

/// Named parameter tensors, iterated in name order.
pub type ParamMap = BTreeMap<String, Tensor>;

/// Parameters registered as leaves on one tape.
#[derive(Debug, Clone, Default)]
pub struct Bound {
    vars: BTreeMap<String, Var>,
}

impl Bound {
    /// Puts every parameter on `tape` as a trainable leaf.
    pub fn register(params: &ParamMap, tape: &mut Tape) -> Bound {
        let vars = params.iter().map(|(k, t)| (k.clone(), tape.param(t.clone()))).collect();
        Bound { vars }
    }

    pub fn var(&self, name: &str) -> Result<Var, TensorError> {
        self.vars.get(name).copied().ok_or_else(|| TensorError::Invalid {
            op: "param",
            msg: format!("no parameter named {name}"),
        })
    }

    /// Gradient of every registered parameter, zeros where none flowed.
    pub fn gradients(&self, tape: &Tape, grads: &Gradients) -> ParamMap {
        self.vars.iter().map(|(k, v)| (k.clone(), grads.get(tape, *v))).collect()
    }
}
