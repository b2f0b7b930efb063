use rand::Rng as _;

use super::spec::{Layer, ModelSpec};
use crate::error::{HalError, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; n],
        }
    }
}

/// Parameter tensors of a [`ModelSpec`], weight then bias per parameterized
/// layer. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub tensors: Vec<Tensor>,
}

impl Params {
    pub fn zeros(spec: &ModelSpec) -> Self {
        Self {
            tensors: spec.param_shapes().into_iter().map(Tensor::zeros).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: &ModelSpec, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut params = Self::zeros(spec);
        let mut slot = 0;
        for layer in spec.layers() {
            let (fan_in, fan_out) = match *layer {
                Layer::Conv2d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                } => (in_channels * kernel * kernel, out_channels * kernel * kernel),
                Layer::Dense { inputs, outputs } => (inputs, outputs),
                _ => continue,
            };
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut params.tensors[slot].data {
                *w = rng.random_range(-a..a);
            }
            slot += 2;
        }
        params
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub fn check_shapes(&self, spec: &ModelSpec) -> Result<()> {
        let shapes = spec.param_shapes();
        if shapes.len() != self.tensors.len() {
            return Err(HalError::Shape(format!(
                "spec has {} parameter tensors, params have {}",
                shapes.len(),
                self.tensors.len()
            )));
        }
        for (i, (s, t)) in shapes.iter().zip(&self.tensors).enumerate() {
            let n: usize = s.iter().product();
            if *s != t.shape || t.data.len() != n {
                return Err(HalError::Shape(format!(
                    "tensor {i}: expected {s:?}, found {:?}",
                    t.shape
                )));
            }
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(HalError::Shape(format!(
                "flat vector of {} for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.data.len();
            t.data.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// `self += alpha * other`, shapes assumed equal.
    pub fn add_scaled(&mut self, other: &Params, alpha: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}
