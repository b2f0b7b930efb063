//! The prediction model: minibatch cross-entropy training on the labeled
//! set, validation accuracy, embeddings and MC-dropout sampling.

use rand::seq::SliceRandom;

use crate::data::{ImageStore, PoolState};
use crate::error::{HalError, Result};
use crate::nn::{
    adam_step, backward, forward, forward_layers, AdamState, Batch, Layer, ModelSpec, Mode, OutputGrad, Params,
};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RetrainMode {
    /// Reinitialize from the seed and train `epochs`.
    Scratch,
    /// Continue from the current parameters for `finetune_epochs`.
    Finetune,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub mode: RetrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            finetune_epochs: 10,
            batch_size: 32,
            lr: 0.001,
            seed: 0,
            mode: RetrainMode::Scratch,
        }
    }
}

/// Correct predictions out of a total; kept as counts so accuracy
/// differences telescope exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn value(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Clean (dropout off) class probabilities plus `n` MC-dropout samples.
#[derive(Clone, Debug, PartialEq)]
pub struct McPrediction {
    pub clean: Vec<f64>,
    pub noisy: Vec<Vec<f64>>,
}

/// Per-item model view used to build observations.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemAnalysis {
    pub embedding: Vec<f64>,
    pub prediction: McPrediction,
}

#[derive(Clone, Debug)]
pub struct Classifier {
    spec: ModelSpec,
    params: Params,
    adam: AdamState,
    config: TrainConfig,
    rounds: u64,
}

const CHUNK: usize = 256;

impl Classifier {
    pub fn new(spec: ModelSpec, classes: usize, config: TrainConfig) -> Result<Self> {
        if !spec.ends_with_softmax() {
            return Err(HalError::InvalidSpec("classifier must end with softmax".into()));
        }
        if spec.output_len() != classes {
            return Err(HalError::InvalidSpec(format!(
                "classifier outputs {} classes, data has {classes}",
                spec.output_len()
            )));
        }
        let params = Params::init(&spec, seed::derive(config.seed, "clf-init", 0));
        let adam = AdamState::new(&params);
        Ok(Self {
            spec,
            params,
            adam,
            config,
            rounds: 0,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn set_params(&mut self, params: Params) -> Result<()> {
        params.check_shapes(&self.spec)?;
        self.adam = AdamState::new(&params);
        self.params = params;
        Ok(())
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut TrainConfig {
        &mut self.config
    }

    pub fn classes(&self) -> usize {
        self.spec.output_len()
    }

    pub fn embedding_len(&self) -> usize {
        self.spec.embedding_len()
    }

    /// Converts a stored image to the model input: channel mean when the
    /// model is single-channel, then integer-factor average pooling.
    pub fn prepare(&self, store: &ImageStore, index: usize) -> Result<Vec<f64>> {
        let want = self.spec.input();
        let have = store.shape();
        let (channels, plane): (usize, Vec<f64>) = if want.channels == have.channels {
            (have.channels, store.image(index).iter().map(|&v| f64::from(v)).collect())
        } else if want.channels == 1 {
            (1, store.luminance(index))
        } else {
            return Err(HalError::Shape(format!(
                "model expects {} channels, store has {}",
                want.channels, have.channels
            )));
        };
        if have.height == want.height && have.width == want.width {
            return Ok(plane);
        }
        let f = have.height / want.height;
        if f == 0 || have.height != f * want.height || have.width != f * want.width {
            return Err(HalError::Shape(format!(
                "cannot downsample {}x{} to {}x{}",
                have.height, have.width, want.height, want.width
            )));
        }
        let area = (f * f) as f64;
        let mut out = vec![0.0; want.len()];
        for c in 0..channels {
            for y in 0..want.height {
                for x in 0..want.width {
                    let mut s = 0.0;
                    for dy in 0..f {
                        for dx in 0..f {
                            s += plane[(c * have.height + y * f + dy) * have.width + x * f + dx];
                        }
                    }
                    out[(c * want.height + y) * want.width + x] = s / area;
                }
            }
        }
        Ok(out)
    }

    fn batch(&self, store: &ImageStore, indices: &[usize]) -> Result<Batch> {
        let mut data = Vec::with_capacity(indices.len() * self.spec.input().len());
        for &i in indices {
            data.extend(self.prepare(store, i)?);
        }
        Ok(Batch::new(indices.len(), data))
    }

    /// Retrains on the labeled set according to the configured mode and
    /// returns the mean cross-entropy of the last epoch.
    pub fn train(&mut self, pool: &PoolState, store: &ImageStore) -> Result<f64> {
        if pool.labeled().is_empty() {
            return Err(HalError::Empty("labeled set"));
        }
        let epochs = match self.config.mode {
            RetrainMode::Scratch => {
                self.params = Params::init(&self.spec, seed::derive(self.config.seed, "clf-init", 0));
                self.adam = AdamState::new(&self.params);
                self.rounds = 0;
                self.config.epochs
            }
            RetrainMode::Finetune => self.config.finetune_epochs,
        };
        let round = self.rounds;
        self.rounds += 1;

        let mut labeled = pool.labeled().to_vec();
        labeled.sort_unstable();
        let inputs: Vec<Vec<f64>> = labeled
            .iter()
            .map(|&i| self.prepare(store, i))
            .collect::<Result<_>>()?;
        let targets: Vec<usize> = labeled.iter().map(|&i| store.label(i)).collect();
        if epochs == 0 {
            return self.mean_loss(&inputs, &targets);
        }

        let bs = self.config.batch_size.clamp(1, labeled.len());
        let classes = self.classes();
        let mut order: Vec<usize> = (0..labeled.len()).collect();
        let mut rng = seed::rng_for(self.config.seed, "clf-shuffle", round);
        let mut last_loss = 0.0;
        for epoch in 0..epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for (b, chunk) in order.chunks(bs).enumerate() {
                let mut data = Vec::with_capacity(chunk.len() * self.spec.input().len());
                for &k in chunk {
                    data.extend_from_slice(&inputs[k]);
                }
                let batch = Batch::new(chunk.len(), data);
                let tag = (round << 40) | ((epoch as u64) << 20) | b as u64;
                let fwd = forward(
                    &self.spec,
                    &self.params,
                    &batch,
                    Mode::Train,
                    seed::derive(self.config.seed, "clf-dropout", tag),
                )?;
                let mut grad = fwd.output.clone();
                let scale = 1.0 / chunk.len() as f64;
                for (r, &k) in chunk.iter().enumerate() {
                    let y = targets[k];
                    loss_sum -= fwd.output[r * classes + y].max(1e-300).ln();
                    grad[r * classes + y] -= 1.0;
                    for g in &mut grad[r * classes..(r + 1) * classes] {
                        *g *= scale;
                    }
                }
                let grads = backward(&self.spec, &self.params, &fwd.cache, OutputGrad::PreSoftmax(&grad))?;
                adam_step(&mut self.params, &grads, &mut self.adam, self.config.lr)?;
            }
            last_loss = loss_sum / labeled.len() as f64;
        }
        Ok(last_loss)
    }

    fn mean_loss(&self, inputs: &[Vec<f64>], targets: &[usize]) -> Result<f64> {
        let data: Vec<f64> = inputs.iter().flatten().copied().collect();
        let fwd = forward(&self.spec, &self.params, &Batch::new(inputs.len(), data), Mode::Eval, 0)?;
        let c = self.classes();
        let total: f64 = targets
            .iter()
            .enumerate()
            .map(|(r, &y)| -fwd.output[r * c + y].max(1e-300).ln())
            .sum();
        Ok(total / targets.len() as f64)
    }

    /// Eval-mode class probabilities, one row per index.
    pub fn predict(&self, store: &ImageStore, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        let c = self.classes();
        let mut out = Vec::with_capacity(indices.len());
        for chunk in indices.chunks(CHUNK) {
            let fwd = forward(&self.spec, &self.params, &self.batch(store, chunk)?, Mode::Eval, 0)?;
            out.extend(fwd.output.chunks(c).map(<[f64]>::to_vec));
        }
        Ok(out)
    }

    /// Fraction of argmax-correct predictions (ties go to the lowest class).
    pub fn evaluate(&self, store: &ImageStore, indices: &[usize]) -> Result<Accuracy> {
        if indices.is_empty() {
            return Err(HalError::Empty("evaluation set"));
        }
        let probs = self.predict(store, indices)?;
        let correct = probs
            .iter()
            .zip(indices)
            .filter(|(p, &i)| argmax(p) == store.label(i))
            .count();
        Ok(Accuracy {
            correct,
            total: indices.len(),
        })
    }

    /// Eval-mode activation of the embedding layer for a prepared input.
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(forward(&self.spec, &self.params, &Batch::single(x), Mode::Eval, 0)?.embedding)
    }

    fn first_dropout(&self) -> Option<usize> {
        self.spec
            .layers()
            .iter()
            .position(|l| matches!(l, Layer::Dropout { .. }))
    }

    /// Clean probabilities plus `n` MC-dropout passes over a prepared input.
    /// Pass `i` uses seed `derive(seed, "mc", i)` and equals a full
    /// [`Mode::McDropout`] forward with that seed.
    pub fn mc_dropout_predict(&self, x: &[f64], n: usize, seed: u64) -> Result<McPrediction> {
        if n < 1 {
            return Err(HalError::InvalidArgument("MC dropout needs at least one pass".into()));
        }
        let batch = Batch::single(x);
        let len = self.spec.layers().len();
        let clean_fwd = forward(&self.spec, &self.params, &batch, Mode::Eval, 0)?;
        let start = self.first_dropout().unwrap_or(len);
        let prefix = forward_layers(&self.spec, &self.params, 0..start, x, 1, Mode::Eval, 0)?;
        let noisy = (0..n)
            .map(|i| {
                forward_layers(
                    &self.spec,
                    &self.params,
                    start..len,
                    &prefix,
                    1,
                    Mode::McDropout,
                    seed::derive(seed, "mc", i as u64),
                )
            })
            .collect::<Result<_>>()?;
        Ok(McPrediction {
            clean: clean_fwd.output,
            noisy,
        })
    }

    /// Embedding and MC-dropout prediction for many stored items at once.
    /// Item `indices[k]` uses MC seed `derive(seed, "item", indices[k])`, so
    /// results match per-item calls of [`Self::mc_dropout_predict`].
    pub fn analyze(&self, store: &ImageStore, indices: &[usize], n_mc: usize, seed: u64) -> Result<Vec<ItemAnalysis>> {
        if n_mc < 1 {
            return Err(HalError::InvalidArgument("MC dropout needs at least one pass".into()));
        }
        let len = self.spec.layers().len();
        let start = self.first_dropout().unwrap_or(len);
        let emb_layer = self.spec.embedding_layer();
        let c = self.classes();
        let emb_len = self.spec.embedding_len();
        let mut out = Vec::with_capacity(indices.len());
        for chunk in indices.chunks(CHUNK) {
            let batch = self.batch(store, chunk)?;
            let fwd = forward(&self.spec, &self.params, &batch, Mode::Eval, 0)?;
            let prefix_len = self.spec.input_shape(start.min(len - 1)).len();
            let prefix = if start < len {
                forward_layers(&self.spec, &self.params, 0..start, batch.data(), chunk.len(), Mode::Eval, 0)?
            } else {
                Vec::new()
            };
            for (r, &idx) in chunk.iter().enumerate() {
                let item_seed = seed::derive(seed, "item", idx as u64);
                let clean = fwd.output[r * c..(r + 1) * c].to_vec();
                let noisy = if start < len {
                    let row = &prefix[r * prefix_len..(r + 1) * prefix_len];
                    (0..n_mc)
                        .map(|i| {
                            forward_layers(
                                &self.spec,
                                &self.params,
                                start..len,
                                row,
                                1,
                                Mode::McDropout,
                                seed::derive(item_seed, "mc", i as u64),
                            )
                        })
                        .collect::<Result<_>>()?
                } else {
                    vec![clean.clone(); n_mc]
                };
                debug_assert!(emb_layer < len);
                out.push(ItemAnalysis {
                    embedding: fwd.embedding[r * emb_len..(r + 1) * emb_len].to_vec(),
                    prediction: McPrediction { clean, noisy },
                });
            }
        }
        Ok(out)
    }

    /// Eval-mode embeddings of stored items.
    pub fn embed_indices(&self, store: &ImageStore, indices: &[usize]) -> Result<Vec<Vec<f64>>> {
        let e = self.spec.embedding_len();
        let mut out = Vec::with_capacity(indices.len());
        for chunk in indices.chunks(CHUNK) {
            let fwd = forward(&self.spec, &self.params, &self.batch(store, chunk)?, Mode::Eval, 0)?;
            out.extend(fwd.embedding.chunks(e).map(<[f64]>::to_vec));
        }
        Ok(out)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
