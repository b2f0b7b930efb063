use crate::error::{HalError, Result};
use crate::features::Observation;
use crate::nn::{forward, AdamState, Batch, Layer, ModelSpec, Mode, Params, Shape};

/// Stored behavior probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-6;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// `sign(x)·ln(1 + |x|)`: near-identity for small inputs, logarithmic for
/// the occasional huge diversity distance.
pub fn symlog(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

/// Policy input row for a pair: both flattened observations, symlog-scaled.
pub fn encode_pair(left: &Observation, right: &Observation, out: &mut Vec<f64>) {
    let start = out.len();
    left.write_into(out);
    right.write_into(out);
    out[start..].iter_mut().for_each(|v| *v = symlog(*v));
}

/// Scores batches of (left, right) pairs.
pub trait Comparator {
    /// `[P(left wins), P(right wins)]` for each pair.
    fn compare(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<[f64; 2]>>;
}

/// Dense comparator over concatenated observation pairs: action 0 means the
/// left candidate wins, action 1 the right.
#[derive(Clone, Debug)]
pub struct PolicyNet {
    spec: ModelSpec,
    params: Params,
    adam: AdamState,
    obs_len: usize,
}

impl PolicyNet {
    /// Glorot-initialized hidden layers and a zero output layer, so an
    /// untrained net is indifferent between the two actions.
    pub fn new(obs_len: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut layers = Vec::new();
        let mut width = 2 * obs_len;
        for &h in hidden {
            layers.push(Layer::Dense {
                inputs: width,
                outputs: h,
            });
            layers.push(Layer::Relu);
            width = h;
        }
        layers.push(Layer::Dense {
            inputs: width,
            outputs: 2,
        });
        layers.push(Layer::Softmax);
        let embedding = layers.len().saturating_sub(3);
        let spec = ModelSpec::new(Shape::flat(2 * obs_len), layers, embedding)?;
        let mut params = Params::init(&spec, seed);
        let n = params.tensors.len();
        for t in &mut params.tensors[n - 2..] {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        Self::from_parts(spec, params)
    }

    pub fn from_parts(spec: ModelSpec, params: Params) -> Result<Self> {
        params.check_shapes(&spec)?;
        if spec.output_len() != 2 || !spec.ends_with_softmax() || !spec.input().len().is_multiple_of(2) {
            return Err(HalError::InvalidSpec("policy must map a pair to a 2-way softmax".into()));
        }
        let obs_len = spec.input().len() / 2;
        let adam = AdamState::new(&params);
        Ok(Self {
            spec,
            params,
            adam,
            obs_len,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn obs_len(&self) -> usize {
        self.obs_len
    }

    pub(crate) fn parts_mut(&mut self) -> (&ModelSpec, &mut Params, &mut AdamState) {
        (&self.spec, &mut self.params, &mut self.adam)
    }

    /// Flattened `[left, right]` rows for a batch of pairs.
    pub fn pair_rows(&self, pairs: &[(&Observation, &Observation)]) -> Result<Batch> {
        let mut data = Vec::with_capacity(pairs.len() * 2 * self.obs_len);
        for (l, r) in pairs {
            if l.len() != self.obs_len || r.len() != self.obs_len {
                return Err(HalError::Shape(format!(
                    "observation lengths {} and {}, policy expects {}",
                    l.len(),
                    r.len(),
                    self.obs_len
                )));
            }
            encode_pair(l, r, &mut data);
        }
        Ok(Batch::new(pairs.len(), data))
    }

    pub fn policy_prob(&self, left: &Observation, right: &Observation) -> Result<[f64; 2]> {
        Ok(self.compare(&[(left, right)])?[0])
    }
}

impl Comparator for PolicyNet {
    fn compare(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<[f64; 2]>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let batch = self.pair_rows(pairs)?;
        let out = forward(&self.spec, &self.params, &batch, Mode::Eval, 0)?.output;
        Ok(out.chunks(2).map(|p| [p[0], p[1]]).collect())
    }
}

/// Deterministic comparator preferring the higher score; equal scores give
/// `[0.5, 0.5]`.
pub struct ScoreComparator<F>(pub F);

impl<F: Fn(&Observation) -> f64> Comparator for ScoreComparator<F> {
    fn compare(&self, pairs: &[(&Observation, &Observation)]) -> Result<Vec<[f64; 2]>> {
        Ok(pairs
            .iter()
            .map(|(l, r)| {
                let (a, b) = ((self.0)(l), (self.0)(r));
                if b > a {
                    [0.0, 1.0]
                } else if a > b {
                    [1.0, 0.0]
                } else {
                    [0.5, 0.5]
                }
            })
            .collect())
    }
}
