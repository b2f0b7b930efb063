//! Minimal neural-network kernel: layer specs, parameters, forward and
//! reverse-mode passes, and Adam. Everything is `f64` and row-major.

mod adam;
mod forward;
mod params;
mod spec;

pub use adam::{adam_step, AdamState};
pub use forward::{
    backward, forward, forward_layers, softmax_rows, Batch, Forward, ForwardCache, Mode,
    OutputGrad,
};
pub use params::{Params, Tensor};
pub use spec::{Layer, ModelSpec, Shape};
