use crate::error::{HalError, Result};
use crate::nn::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Original,
    /// Noisy copy of image `source` of the store it was built from.
    Duplicate { source: usize },
    Shifted,
}

/// Immutable image collection. Pixels are stored as `f32` in `[0, 1]`,
/// row-major `C × H × W` per image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageStore {
    shape: Shape,
    classes: usize,
    pixels: Vec<f32>,
    labels: Vec<usize>,
    provenance: Vec<Provenance>,
}

impl ImageStore {
    pub fn new(
        shape: Shape,
        classes: usize,
        pixels: Vec<f32>,
        labels: Vec<usize>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(HalError::InvalidArgument(format!("need at least 2 classes, got {classes}")));
        }
        if shape.is_empty() {
            return Err(HalError::InvalidArgument("empty image shape".into()));
        }
        let n = labels.len();
        if pixels.len() != n * shape.len() {
            return Err(HalError::CountMismatch {
                images: pixels.len() / shape.len(),
                labels: n,
            });
        }
        if provenance.len() != n {
            return Err(HalError::InvalidArgument("provenance count differs from label count".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(HalError::InvalidArgument(format!("label {bad} out of range for {classes} classes")));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(HalError::InvalidArgument("pixel outside [0, 1]".into()));
        }
        Ok(Self {
            shape,
            classes,
            pixels,
            labels,
            provenance,
        })
    }

    /// All-original store.
    pub fn from_parts(shape: Shape, classes: usize, pixels: Vec<f32>, labels: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        Self::new(shape, classes, pixels, labels, vec![Provenance::Original; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let n = self.shape.len();
        &self.pixels[i * n..(i + 1) * n]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn provenance(&self, i: usize) -> Provenance {
        self.provenance[i]
    }

    pub fn is_duplicate(&self, i: usize) -> bool {
        matches!(self.provenance[i], Provenance::Duplicate { .. })
    }

    /// Indices of each class, ascending.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Single-channel view: the channel mean for multi-channel images,
    /// computed as `x₀ + Σ (x_c − x₀) / C` so equal channels reproduce the
    /// source value bit for bit.
    pub fn luminance(&self, i: usize) -> Vec<f64> {
        let img = self.image(i);
        let plane = self.shape.height * self.shape.width;
        let c = self.shape.channels;
        if c == 1 {
            return img.iter().map(|&v| f64::from(v)).collect();
        }
        (0..plane)
            .map(|p| {
                let x0 = f64::from(img[p]);
                let mut acc = x0;
                for ch in 1..c {
                    acc += (f64::from(img[ch * plane + p]) - x0) / c as f64;
                }
                acc
            })
            .collect()
    }

    /// New store holding `indices` in the given order; provenance carries over.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut pixels = Vec::with_capacity(indices.len() * self.shape.len());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
        }
        Self {
            shape: self.shape,
            classes: self.classes,
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
        }
    }

    /// Appends `other` (same shape and class count). Duplicate sources in
    /// `other` are re-based by `source_offset`.
    pub fn concat(&self, other: &Self, source_offset: usize) -> Result<Self> {
        if self.shape != other.shape || self.classes != other.classes {
            return Err(HalError::Shape("concatenating stores with different shapes".into()));
        }
        let mut out = self.clone();
        out.pixels.extend_from_slice(&other.pixels);
        out.labels.extend_from_slice(&other.labels);
        out.provenance.extend(other.provenance.iter().map(|p| match *p {
            Provenance::Duplicate { source } => Provenance::Duplicate {
                source: source + source_offset,
            },
            p => p,
        }));
        Ok(out)
    }
}
