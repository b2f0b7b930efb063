//! Versioned binary container for a model spec and its parameters.
//!
//! Layout (little-endian): magic `HALCKPT\0`, `u32` version, `u8` kind,
//! input shape as three `u64`, layer count and layers (tag byte then
//! fields), embedding layer, tensor count and tensors (rank, dims, `f64`
//! data).

use std::fs;
use std::path::Path;

use crate::error::{HalError, Result};
use crate::nn::{Layer, ModelSpec, Params, Shape, Tensor};

const MAGIC: &[u8; 8] = b"HALCKPT\0";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Classifier,
    Policy,
}

pub fn encode(kind: ModelKind, spec: &ModelSpec, params: &Params) -> Result<Vec<u8>> {
    params.check_shapes(spec)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match kind {
        ModelKind::Classifier => 0,
        ModelKind::Policy => 1,
    });
    let put = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u64).to_le_bytes());
    let s = spec.input();
    for v in [s.channels, s.height, s.width, spec.layers().len()] {
        put(&mut out, v);
    }
    for layer in spec.layers() {
        match *layer {
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                padding,
            } => {
                out.push(0);
                for v in [in_channels, out_channels, kernel, padding] {
                    put(&mut out, v);
                }
            }
            Layer::MaxPool { size } => {
                out.push(1);
                put(&mut out, size);
            }
            Layer::Dense { inputs, outputs } => {
                out.push(2);
                put(&mut out, inputs);
                put(&mut out, outputs);
            }
            Layer::Relu => out.push(3),
            Layer::Dropout { p } => {
                out.push(4);
                out.extend_from_slice(&p.to_le_bytes());
            }
            Layer::Softmax => out.push(5),
        }
    }
    put(&mut out, spec.embedding_layer());
    put(&mut out, params.tensors.len());
    for t in &params.tensors {
        put(&mut out, t.shape.len());
        for &d in &t.shape {
            put(&mut out, d);
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| HalError::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn usize(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| HalError::Checkpoint("size out of range".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(buf: &[u8]) -> Result<(ModelKind, ModelSpec, Params)> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(HalError::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(HalError::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let kind = match r.u8()? {
        0 => ModelKind::Classifier,
        1 => ModelKind::Policy,
        k => return Err(HalError::Checkpoint(format!("unknown model kind {k}"))),
    };
    let input = Shape::new(r.usize()?, r.usize()?, r.usize()?);
    let n_layers = r.usize()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        layers.push(match r.u8()? {
            0 => Layer::Conv2d {
                in_channels: r.usize()?,
                out_channels: r.usize()?,
                kernel: r.usize()?,
                padding: r.usize()?,
            },
            1 => Layer::MaxPool { size: r.usize()? },
            2 => Layer::Dense {
                inputs: r.usize()?,
                outputs: r.usize()?,
            },
            3 => Layer::Relu,
            4 => Layer::Dropout { p: r.f64()? },
            5 => Layer::Softmax,
            t => return Err(HalError::Checkpoint(format!("unknown layer tag {t}"))),
        });
    }
    let spec = ModelSpec::new(input, layers, r.usize()?)?;
    let n_tensors = r.usize()?;
    let mut tensors = Vec::with_capacity(n_tensors.min(1024));
    for _ in 0..n_tensors {
        let rank = r.usize()?;
        let shape = (0..rank).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let len = len.ok_or_else(|| HalError::Checkpoint("tensor size overflow".into()))?;
        if len > buf.len() {
            return Err(HalError::Checkpoint("truncated checkpoint".into()));
        }
        let data = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        tensors.push(Tensor { shape, data });
    }
    if r.pos != buf.len() {
        return Err(HalError::Checkpoint("trailing bytes after checkpoint".into()));
    }
    let params = Params { tensors };
    params.check_shapes(&spec)?;
    Ok((kind, spec, params))
}

pub fn save(path: impl AsRef<Path>, kind: ModelKind, spec: &ModelSpec, params: &Params) -> Result<()> {
    fs::write(path, encode(kind, spec, params)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(ModelKind, ModelSpec, Params)> {
    decode(&fs::read(path)?)
}
