use crate::error::{HalError, Result};

/// Per-sample activation shape, channels × height × width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub const fn flat(len: usize) -> Self {
        Self::new(len, 1, 1)
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// Stride-1 convolution with symmetric zero padding.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        padding: usize,
    },
    /// Non-overlapping max pooling, floor mode.
    MaxPool { size: usize },
    /// Affine map on the flattened input.
    Dense { inputs: usize, outputs: usize },
    Relu,
    /// Inverted dropout: kept units are scaled by `1 / (1 - p)`.
    Dropout { p: f64 },
    /// Softmax over the flattened activation of each row.
    Softmax,
}

impl Layer {
    pub fn has_params(&self) -> bool {
        matches!(self, Layer::Conv2d { .. } | Layer::Dense { .. })
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        match *self {
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                padding,
            } => {
                if input.channels != in_channels {
                    return Err(HalError::InvalidSpec(format!(
                        "conv expects {in_channels} input channels, got {}",
                        input.channels
                    )));
                }
                if kernel == 0 || out_channels == 0 {
                    return Err(HalError::InvalidSpec("conv with zero kernel or channels".into()));
                }
                let h = input.height + 2 * padding;
                let w = input.width + 2 * padding;
                if h < kernel || w < kernel {
                    return Err(HalError::InvalidSpec(format!(
                        "conv kernel {kernel} larger than padded input {h}x{w}"
                    )));
                }
                Ok(Shape::new(out_channels, h - kernel + 1, w - kernel + 1))
            }
            Layer::MaxPool { size } => {
                if size == 0 || input.height < size || input.width < size {
                    return Err(HalError::InvalidSpec(format!(
                        "max pool {size} does not fit {}x{}",
                        input.height, input.width
                    )));
                }
                Ok(Shape::new(input.channels, input.height / size, input.width / size))
            }
            Layer::Dense { inputs, outputs } => {
                if input.len() != inputs {
                    return Err(HalError::InvalidSpec(format!(
                        "dense expects {inputs} inputs, previous layer yields {}",
                        input.len()
                    )));
                }
                if outputs == 0 {
                    return Err(HalError::InvalidSpec("dense with zero outputs".into()));
                }
                Ok(Shape::flat(outputs))
            }
            Layer::Dropout { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(HalError::InvalidSpec(format!("dropout rate {p} outside [0, 1]")));
                }
                Ok(input)
            }
            Layer::Relu | Layer::Softmax => Ok(input),
        }
    }
}

/// Layer list plus the designated embedding layer. Construction checks that
/// adjacent shapes compose.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    input: Shape,
    layers: Vec<Layer>,
    embedding_layer: usize,
    shapes: Vec<Shape>,
}

impl ModelSpec {
    pub fn new(input: Shape, layers: Vec<Layer>, embedding_layer: usize) -> Result<Self> {
        if input.is_empty() {
            return Err(HalError::InvalidSpec("empty input shape".into()));
        }
        if layers.is_empty() {
            return Err(HalError::InvalidSpec("no layers".into()));
        }
        if embedding_layer >= layers.len() {
            return Err(HalError::InvalidSpec(format!(
                "embedding layer {embedding_layer} out of range for {} layers",
                layers.len()
            )));
        }
        let mut shapes = Vec::with_capacity(layers.len());
        let mut cur = input;
        for (i, layer) in layers.iter().enumerate() {
            cur = layer
                .output_shape(cur)
                .map_err(|e| HalError::InvalidSpec(format!("layer {i}: {e}")))?;
            shapes.push(cur);
        }
        Ok(Self {
            input,
            layers,
            embedding_layer,
            shapes,
        })
    }

    /// `dense(in → h₀)` (embedding) `→ relu → … → dropout(p) → dense(→ classes) → softmax`.
    /// The last hidden dense layer is the embedding layer.
    pub fn mlp(input: Shape, hidden: &[usize], classes: usize, dropout: f64) -> Result<Self> {
        let mut layers = Vec::new();
        let mut width = input.len();
        let mut embedding = 0;
        for &h in hidden {
            embedding = layers.len();
            layers.push(Layer::Dense {
                inputs: width,
                outputs: h,
            });
            layers.push(Layer::Relu);
            width = h;
        }
        layers.push(Layer::Dropout { p: dropout });
        if hidden.is_empty() {
            embedding = layers.len();
        }
        layers.push(Layer::Dense {
            inputs: width,
            outputs: classes,
        });
        layers.push(Layer::Softmax);
        Self::new(input, layers, embedding)
    }

    /// Reduced LeNet: conv(→6, 5×5, pad 2) relu pool2 conv(→16, 5×5) relu pool2
    /// dense(→64, embedding) relu dropout dense(→classes) softmax.
    pub fn lenet_lite(input: Shape, classes: usize, dropout: f64) -> Result<Self> {
        let conv1 = Layer::Conv2d {
            in_channels: input.channels,
            out_channels: 6,
            kernel: 5,
            padding: 2,
        };
        let s1 = conv1.output_shape(input)?;
        let p1 = Shape::new(6, s1.height / 2, s1.width / 2);
        let conv2 = Layer::Conv2d {
            in_channels: 6,
            out_channels: 16,
            kernel: 5,
            padding: 0,
        };
        let s2 = conv2.output_shape(p1)?;
        let flat = 16 * (s2.height / 2) * (s2.width / 2);
        let layers = vec![
            conv1,
            Layer::Relu,
            Layer::MaxPool { size: 2 },
            conv2,
            Layer::Relu,
            Layer::MaxPool { size: 2 },
            Layer::Dense {
                inputs: flat,
                outputs: 64,
            },
            Layer::Relu,
            Layer::Dropout { p: dropout },
            Layer::Dense {
                inputs: 64,
                outputs: classes,
            },
            Layer::Softmax,
        ];
        Self::new(input, layers, 6)
    }

    pub fn input(&self) -> Shape {
        self.input
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn embedding_layer(&self) -> usize {
        self.embedding_layer
    }

    pub fn embedding_len(&self) -> usize {
        self.shapes[self.embedding_layer].len()
    }

    pub fn output_len(&self) -> usize {
        self.shapes[self.shapes.len() - 1].len()
    }

    /// Output shape of layer `i`.
    pub fn output_shape(&self, i: usize) -> Shape {
        self.shapes[i]
    }

    /// Input shape of layer `i`.
    pub fn input_shape(&self, i: usize) -> Shape {
        if i == 0 {
            self.input
        } else {
            self.shapes[i - 1]
        }
    }

    pub fn ends_with_softmax(&self) -> bool {
        matches!(self.layers.last(), Some(Layer::Softmax))
    }

    /// Shapes of the parameter tensors in storage order (weight then bias for
    /// every parameterized layer).
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match *layer {
                Layer::Conv2d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                } => {
                    out.push(vec![out_channels, in_channels, kernel, kernel]);
                    out.push(vec![out_channels]);
                }
                Layer::Dense { inputs, outputs } => {
                    out.push(vec![outputs, inputs]);
                    out.push(vec![outputs]);
                }
                _ => {}
            }
        }
        out
    }

    /// Index of the first parameter tensor of each layer, if it has any.
    pub(crate) fn param_slots(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.layers
            .iter()
            .map(|l| {
                if l.has_params() {
                    let slot = next;
                    next += 2;
                    Some(slot)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum()
    }
}
