use std::ops::Range;

use rand::Rng as _;

use super::params::Params;
use super::spec::{Layer, ModelSpec, Shape};
use crate::error::{HalError, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Eval,
    /// Dropout active at inference time (MC dropout).
    McDropout,
}

/// A batch of samples, row-major, each row shaped like the model input.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    rows: usize,
    data: Vec<f64>,
}

impl Batch {
    pub fn new(rows: usize, data: Vec<f64>) -> Self {
        Self { rows, data }
    }

    pub fn single(row: &[f64]) -> Self {
        Self::new(1, row.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Everything a backward pass needs: the input of every layer, the output,
/// dropout scale masks and max-pool winners.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    mode: Mode,
    rows: usize,
    param_count: usize,
    activations: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
    argmax: Vec<Option<Vec<usize>>>,
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Dropout mask of layer `i` (scale per element), present iff the pass
    /// was not in eval mode and layer `i` is a dropout layer.
    pub fn mask(&self, i: usize) -> Option<&[f64]> {
        self.masks.get(i).and_then(|m| m.as_deref())
    }
}

#[derive(Clone, Debug)]
pub struct Forward {
    /// Final-layer output, `rows × output_len`.
    pub output: Vec<f64>,
    /// Activation of the embedding layer, `rows × embedding_len`.
    pub embedding: Vec<f64>,
    pub cache: ForwardCache,
}

/// Gradient handed to [`backward`].
#[derive(Clone, Copy, Debug)]
pub enum OutputGrad<'a> {
    /// Gradient with respect to the final output.
    Output(&'a [f64]),
    /// Gradient with respect to the input of a trailing softmax layer. Used for
    /// cross-entropy and log-likelihood losses, where `∂/∂z = p − target`
    /// avoids dividing by small probabilities.
    PreSoftmax(&'a [f64]),
}

fn check_inputs(spec: &ModelSpec, params: &Params, batch: &Batch) -> Result<()> {
    params.check_shapes(spec)?;
    if !params.is_finite() {
        return Err(HalError::NonFinite("parameters"));
    }
    let want = batch.rows * spec.input().len();
    if batch.data.len() != want {
        return Err(HalError::Shape(format!(
            "batch of {} rows needs {want} values for input {:?}, got {}",
            batch.rows,
            spec.input(),
            batch.data.len()
        )));
    }
    Ok(())
}

/// Runs the whole network.
pub fn forward(spec: &ModelSpec, params: &Params, batch: &Batch, mode: Mode, seed: u64) -> Result<Forward> {
    check_inputs(spec, params, batch)?;
    let n_layers = spec.layers().len();
    let slots = spec.param_slots();
    let mut rng = seed::rng(seed);
    let mut activations = Vec::with_capacity(n_layers + 1);
    let mut masks = vec![None; n_layers];
    let mut argmax = vec![None; n_layers];
    activations.push(batch.data.clone());
    for i in 0..n_layers {
        let out = run_layer(
            spec,
            params,
            &slots,
            i,
            &activations[i],
            batch.rows,
            mode,
            &mut rng,
            &mut masks[i],
            &mut argmax[i],
        );
        activations.push(out);
    }
    let output = activations[n_layers].clone();
    let embedding = activations[spec.embedding_layer() + 1].clone();
    Ok(Forward {
        output,
        embedding,
        cache: ForwardCache {
            mode,
            rows: batch.rows,
            param_count: params.len(),
            activations,
            masks,
            argmax,
        },
    })
}

/// Runs `layers` only, starting from an activation shaped like the input of
/// `layers.start`, and returns the output of the last layer in the range.
/// Dropout masks are drawn from `seed` exactly as [`forward`] draws them, so
/// a suffix that contains every dropout layer reproduces the full pass.
pub fn forward_layers(
    spec: &ModelSpec,
    params: &Params,
    layers: Range<usize>,
    input: &[f64],
    rows: usize,
    mode: Mode,
    seed: u64,
) -> Result<Vec<f64>> {
    if layers.start > layers.end || layers.end > spec.layers().len() {
        return Err(HalError::InvalidArgument(format!("layer range {layers:?}")));
    }
    let in_shape = spec.input_shape(layers.start);
    if input.len() != rows * in_shape.len() {
        return Err(HalError::Shape(format!(
            "layer {} expects {} values per row",
            layers.start,
            in_shape.len()
        )));
    }
    let slots = spec.param_slots();
    let mut rng = seed::rng(seed);
    let mut cur = input.to_vec();
    for i in layers {
        let (mut m, mut a) = (None, None);
        cur = run_layer(spec, params, &slots, i, &cur, rows, mode, &mut rng, &mut m, &mut a);
    }
    Ok(cur)
}

#[allow(clippy::too_many_arguments)]
fn run_layer(
    spec: &ModelSpec,
    params: &Params,
    slots: &[Option<usize>],
    i: usize,
    x: &[f64],
    rows: usize,
    mode: Mode,
    rng: &mut seed::Rng,
    mask_out: &mut Option<Vec<f64>>,
    argmax_out: &mut Option<Vec<usize>>,
) -> Vec<f64> {
    let in_shape = spec.input_shape(i);
    let out_shape = spec.output_shape(i);
    match spec.layers()[i] {
        Layer::Dense { inputs, outputs } => {
            let s = slots[i].expect("dense has params");
            dense_forward(x, rows, inputs, outputs, &params.tensors[s].data, &params.tensors[s + 1].data)
        }
        Layer::Conv2d { padding, kernel, .. } => {
            let s = slots[i].expect("conv has params");
            conv_forward(
                x,
                rows,
                in_shape,
                out_shape,
                kernel,
                padding,
                &params.tensors[s].data,
                &params.tensors[s + 1].data,
            )
        }
        Layer::MaxPool { size } => {
            let (y, idx) = maxpool_forward(x, rows, in_shape, out_shape, size);
            *argmax_out = Some(idx);
            y
        }
        Layer::Relu => x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
        Layer::Dropout { p } => {
            if mode == Mode::Eval {
                x.to_vec()
            } else {
                let scale = 1.0 / (1.0 - p);
                let mask: Vec<f64> = (0..x.len())
                    .map(|_| if rng.random::<f64>() >= p { scale } else { 0.0 })
                    .collect();
                let y = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
                *mask_out = Some(mask);
                y
            }
        }
        Layer::Softmax => softmax_rows(x, out_shape.len()),
    }
}

/// Numerically stable softmax of each `cols`-wide row.
pub fn softmax_rows(x: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (row, o) in x.chunks(cols).zip(out.chunks_mut(cols)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (oi, &v) in o.iter_mut().zip(row) {
            *oi = (v - max).exp();
            sum += *oi;
        }
        for oi in o.iter_mut() {
            *oi /= sum;
        }
    }
    out
}

fn dense_forward(x: &[f64], rows: usize, inputs: usize, outputs: usize, w: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; rows * outputs];
    for r in 0..rows {
        let xr = &x[r * inputs..(r + 1) * inputs];
        for o in 0..outputs {
            let wr = &w[o * inputs..(o + 1) * inputs];
            let mut s = b[o];
            for (wi, xi) in wr.iter().zip(xr) {
                s += wi * xi;
            }
            y[r * outputs + o] = s;
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_forward(
    x: &[f64],
    rows: usize,
    ins: Shape,
    outs: Shape,
    k: usize,
    pad: usize,
    w: &[f64],
    b: &[f64],
) -> Vec<f64> {
    let (ic, ih, iw) = (ins.channels, ins.height as isize, ins.width as isize);
    let (oc, oh, ow) = (outs.channels, outs.height, outs.width);
    let mut y = vec![0.0; rows * outs.len()];
    for r in 0..rows {
        let xr = &x[r * ins.len()..(r + 1) * ins.len()];
        let yr = &mut y[r * outs.len()..(r + 1) * outs.len()];
        for o in 0..oc {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut s = b[o];
                    for c in 0..ic {
                        for ky in 0..k {
                            let iy = (oy + ky) as isize - pad as isize;
                            if iy < 0 || iy >= ih {
                                continue;
                            }
                            let xrow = (c * ins.height + iy as usize) * ins.width;
                            let wrow = ((o * ic + c) * k + ky) * k;
                            for kx in 0..k {
                                let ix = (ox + kx) as isize - pad as isize;
                                if ix < 0 || ix >= iw {
                                    continue;
                                }
                                s += w[wrow + kx] * xr[xrow + ix as usize];
                            }
                        }
                    }
                    yr[(o * oh + oy) * ow + ox] = s;
                }
            }
        }
    }
    y
}

fn maxpool_forward(x: &[f64], rows: usize, ins: Shape, outs: Shape, size: usize) -> (Vec<f64>, Vec<usize>) {
    let mut y = vec![0.0; rows * outs.len()];
    let mut idx = vec![0; rows * outs.len()];
    for r in 0..rows {
        let base = r * ins.len();
        for c in 0..outs.channels {
            for oy in 0..outs.height {
                for ox in 0..outs.width {
                    let mut best = f64::NEG_INFINITY;
                    let mut at = 0;
                    for dy in 0..size {
                        for dx in 0..size {
                            let j = base + (c * ins.height + oy * size + dy) * ins.width + ox * size + dx;
                            if x[j] > best {
                                best = x[j];
                                at = j;
                            }
                        }
                    }
                    let o = r * outs.len() + (c * outs.height + oy) * outs.width + ox;
                    y[o] = best;
                    idx[o] = at;
                }
            }
        }
    }
    (y, idx)
}

/// Reverse-mode pass over the computation recorded in `cache`. Returns
/// parameter gradients summed over the batch rows.
pub fn backward(spec: &ModelSpec, params: &Params, cache: &ForwardCache, grad: OutputGrad<'_>) -> Result<Params> {
    params.check_shapes(spec)?;
    let n_layers = spec.layers().len();
    if cache.param_count != params.len() {
        return Err(HalError::CacheMismatch(format!(
            "cache recorded {} parameters, params have {}",
            cache.param_count,
            params.len()
        )));
    }
    if cache.activations.len() != n_layers + 1 {
        return Err(HalError::CacheMismatch(format!(
            "cache has {} activations for {n_layers} layers",
            cache.activations.len()
        )));
    }
    let rows = cache.rows;
    for (i, a) in cache.activations.iter().enumerate() {
        let want = if i < n_layers { spec.input_shape(i).len() } else { spec.output_len() };
        if a.len() != rows * want {
            return Err(HalError::CacheMismatch(format!("activation {i} has wrong size")));
        }
    }
    let (mut g, top) = match grad {
        OutputGrad::Output(g) => (g.to_vec(), n_layers),
        OutputGrad::PreSoftmax(g) => {
            if !spec.ends_with_softmax() {
                return Err(HalError::InvalidArgument(
                    "pre-softmax gradient for a model without a trailing softmax".into(),
                ));
            }
            (g.to_vec(), n_layers - 1)
        }
    };
    let want = rows * if top == n_layers { spec.output_len() } else { spec.input_shape(top).len() };
    if g.len() != want {
        return Err(HalError::Shape(format!("loss gradient has {} values, expected {want}", g.len())));
    }

    let slots = spec.param_slots();
    let mut grads = Params::zeros(spec);
    for i in (0..top).rev() {
        let x = &cache.activations[i];
        let in_shape = spec.input_shape(i);
        let out_shape = spec.output_shape(i);
        g = match spec.layers()[i] {
            Layer::Dense { inputs, outputs } => {
                let s = slots[i].expect("dense has params");
                let w = &params.tensors[s].data;
                let mut gx = vec![0.0; rows * inputs];
                let (gw, rest) = grads.tensors.split_at_mut(s + 1);
                let gw = &mut gw[s].data;
                let gb = &mut rest[0].data;
                for r in 0..rows {
                    let xr = &x[r * inputs..(r + 1) * inputs];
                    let gxr = &mut gx[r * inputs..(r + 1) * inputs];
                    for o in 0..outputs {
                        let go = g[r * outputs + o];
                        if go == 0.0 {
                            continue;
                        }
                        gb[o] += go;
                        let wr = &w[o * inputs..(o + 1) * inputs];
                        let gwr = &mut gw[o * inputs..(o + 1) * inputs];
                        for j in 0..inputs {
                            gwr[j] += go * xr[j];
                            gxr[j] += go * wr[j];
                        }
                    }
                }
                gx
            }
            Layer::Conv2d { kernel, padding, .. } => {
                let s = slots[i].expect("conv has params");
                let (gw, rest) = grads.tensors.split_at_mut(s + 1);
                conv_backward(
                    x,
                    &g,
                    rows,
                    in_shape,
                    out_shape,
                    kernel,
                    padding,
                    &params.tensors[s].data,
                    &mut gw[s].data,
                    &mut rest[0].data,
                )
            }
            Layer::MaxPool { .. } => {
                let idx = cache.argmax[i]
                    .as_ref()
                    .ok_or_else(|| HalError::CacheMismatch(format!("missing pool indices at layer {i}")))?;
                let mut gx = vec![0.0; rows * in_shape.len()];
                for (o, &j) in idx.iter().enumerate() {
                    gx[j] += g[o];
                }
                gx
            }
            Layer::Relu => g
                .iter()
                .zip(x)
                .map(|(gi, xi)| if *xi > 0.0 { *gi } else { 0.0 })
                .collect(),
            Layer::Dropout { .. } => match &cache.masks[i] {
                Some(mask) => g.iter().zip(mask).map(|(gi, m)| gi * m).collect(),
                None if cache.mode == Mode::Eval => g,
                None => return Err(HalError::CacheMismatch(format!("missing dropout mask at layer {i}"))),
            },
            Layer::Softmax => {
                let y = &cache.activations[i + 1];
                let cols = out_shape.len();
                let mut gx = vec![0.0; g.len()];
                for r in 0..rows {
                    let yr = &y[r * cols..(r + 1) * cols];
                    let gr = &g[r * cols..(r + 1) * cols];
                    let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for c in 0..cols {
                        gx[r * cols + c] = yr[c] * (gr[c] - dot);
                    }
                }
                gx
            }
        };
    }
    Ok(grads)
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    g: &[f64],
    rows: usize,
    ins: Shape,
    outs: Shape,
    k: usize,
    pad: usize,
    w: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
) -> Vec<f64> {
    let (ic, ih, iw) = (ins.channels, ins.height as isize, ins.width as isize);
    let (oc, oh, ow) = (outs.channels, outs.height, outs.width);
    let mut gx = vec![0.0; rows * ins.len()];
    for r in 0..rows {
        let xr = &x[r * ins.len()..(r + 1) * ins.len()];
        let gr = &g[r * outs.len()..(r + 1) * outs.len()];
        let gxr = &mut gx[r * ins.len()..(r + 1) * ins.len()];
        for o in 0..oc {
            for oy in 0..oh {
                for ox in 0..ow {
                    let go = gr[(o * oh + oy) * ow + ox];
                    if go == 0.0 {
                        continue;
                    }
                    gb[o] += go;
                    for c in 0..ic {
                        for ky in 0..k {
                            let iy = (oy + ky) as isize - pad as isize;
                            if iy < 0 || iy >= ih {
                                continue;
                            }
                            let xrow = (c * ins.height + iy as usize) * ins.width;
                            let wrow = ((o * ic + c) * k + ky) * k;
                            for kx in 0..k {
                                let ix = (ox + kx) as isize - pad as isize;
                                if ix < 0 || ix >= iw {
                                    continue;
                                }
                                gw[wrow + kx] += go * xr[xrow + ix as usize];
                                gxr[xrow + ix as usize] += go * w[wrow + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    gx
}
