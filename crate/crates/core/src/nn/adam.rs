use super::params::Params;
use crate::error::{HalError, Result};

/// Adam moments and hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        let mut zero = params.clone();
        for t in &mut zero.tensors {
            t.data.fill(0.0);
        }
        Self {
            m: zero.clone(),
            v: zero,
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, lr: f64) -> Result<()> {
    let same = |a: &Params, b: &Params| {
        a.tensors.len() == b.tensors.len()
            && a.tensors
                .iter()
                .zip(&b.tensors)
                .all(|(x, y)| x.data.len() == y.data.len())
    };
    if !same(params, grads) || !same(params, &state.m) || !same(params, &state.v) {
        return Err(HalError::Shape("adam: params, grads and moments disagree".into()));
    }
    if !grads.is_finite() {
        return Err(HalError::NonFinite("gradient"));
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (k, p) in params.tensors.iter_mut().enumerate() {
        let g = &grads.tensors[k].data;
        let m = &mut state.m.tensors[k].data;
        let v = &mut state.v.tensors[k].data;
        for i in 0..p.data.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p.data[i] -= lr * mhat / (vhat.sqrt() + state.eps);
        }
    }
    Ok(())
}
