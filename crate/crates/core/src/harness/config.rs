use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::classifier::{RetrainMode, TrainConfig};
use crate::error::{HalError, Result};
use crate::features::{FeatureToggles, Representation};
use crate::nn::{ModelSpec, Shape};
use crate::policy::PgConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Profile {
    /// Minutes-scale defaults.
    Desk,
    /// Full-size pool and episode counts.
    Paper,
}

impl FromStr for Profile {
    type Err = HalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            _ => Err(HalError::Config(format!("unknown profile `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LeNet,
    Mlp,
}

/// Every knob of an experiment. Field names double as config-file keys.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub episodes: usize,
    pub steps: usize,
    pub batch: usize,
    pub pool_size: usize,
    pub initial_labeled: usize,
    pub validation: usize,
    pub gamma: f64,
    pub policy_lr: f64,
    pub policy_hidden: Vec<usize>,
    pub clip_lo: f64,
    pub clip_hi: f64,
    pub pg_baseline: bool,
    pub pg_updates: usize,
    pub replay_capacity: usize,
    pub n_mc: usize,
    pub model: ModelKind,
    pub mlp_hidden: usize,
    pub input_size: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub finetune_epochs: usize,
    pub clf_batch: usize,
    pub clf_lr: f64,
    pub retrain: RetrainMode,
    pub representation: Representation,
    pub use_uncertainty: bool,
    pub use_diversity: bool,
    pub use_prior: bool,
    pub use_bias_aware: bool,
    pub seed: u64,
    pub repeats: usize,
    pub synthetic_size: usize,
    pub dup_fraction: f64,
    pub dup_noise: f64,
    pub blend: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| HalError::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(HalError::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl EpisodeConfig {
    pub fn profile(profile: Profile) -> Self {
        let desk = Self {
            episodes: 50,
            steps: 10,
            batch: 10,
            pool_size: 2000,
            initial_labeled: 50,
            validation: 1000,
            gamma: 0.9998,
            policy_lr: 0.001,
            policy_hidden: vec![64, 64],
            clip_lo: 0.1,
            clip_hi: 10.0,
            pg_baseline: false,
            pg_updates: 1,
            replay_capacity: 1_000_000,
            n_mc: 10,
            model: ModelKind::LeNet,
            mlp_hidden: 64,
            input_size: 14,
            dropout: 0.5,
            epochs: 30,
            finetune_epochs: 10,
            clf_batch: 32,
            clf_lr: 0.001,
            retrain: RetrainMode::Scratch,
            representation: Representation::Mean,
            use_uncertainty: true,
            use_diversity: true,
            use_prior: true,
            use_bias_aware: true,
            seed: 0,
            repeats: 15,
            synthetic_size: 4000,
            dup_fraction: 0.8,
            dup_noise: 0.05,
            blend: 0.5,
        };
        match profile {
            Profile::Desk => desk,
            Profile::Paper => Self {
                episodes: 800,
                pool_size: 60000,
                validation: 10000,
                input_size: 28,
                synthetic_size: 70050,
                ..desk
            },
        }
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim();
        match k {
            "episodes" => self.episodes = parse(k, value)?,
            "steps" => self.steps = parse(k, value)?,
            "batch" => self.batch = parse(k, value)?,
            "pool_size" => self.pool_size = parse(k, value)?,
            "initial_labeled" => self.initial_labeled = parse(k, value)?,
            "validation" => self.validation = parse(k, value)?,
            "gamma" => self.gamma = parse(k, value)?,
            "policy_lr" => self.policy_lr = parse(k, value)?,
            "policy_hidden" => {
                self.policy_hidden = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(k, s))
                    .collect::<Result<_>>()?
            }
            "clip_lo" => self.clip_lo = parse(k, value)?,
            "clip_hi" => self.clip_hi = parse(k, value)?,
            "pg_baseline" => self.pg_baseline = parse_bool(k, value)?,
            "pg_updates" => self.pg_updates = parse(k, value)?,
            "replay_capacity" => self.replay_capacity = parse(k, value)?,
            "n_mc" => self.n_mc = parse(k, value)?,
            "model" => {
                self.model = match value.trim() {
                    "lenet" => ModelKind::LeNet,
                    "mlp" => ModelKind::Mlp,
                    v => return Err(HalError::Config(format!("unknown model `{v}`"))),
                }
            }
            "mlp_hidden" => self.mlp_hidden = parse(k, value)?,
            "input_size" => self.input_size = parse(k, value)?,
            "dropout" => self.dropout = parse(k, value)?,
            "epochs" => self.epochs = parse(k, value)?,
            "finetune_epochs" => self.finetune_epochs = parse(k, value)?,
            "clf_batch" => self.clf_batch = parse(k, value)?,
            "clf_lr" => self.clf_lr = parse(k, value)?,
            "retrain" => {
                self.retrain = match value.trim() {
                    "scratch" => RetrainMode::Scratch,
                    "finetune" => RetrainMode::Finetune,
                    v => return Err(HalError::Config(format!("unknown retrain mode `{v}`"))),
                }
            }
            "representation" => self.representation = value.trim().parse()?,
            "use_uncertainty" => self.use_uncertainty = parse_bool(k, value)?,
            "use_diversity" => self.use_diversity = parse_bool(k, value)?,
            "use_prior" => self.use_prior = parse_bool(k, value)?,
            "use_bias_aware" => self.use_bias_aware = parse_bool(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "repeats" => self.repeats = parse(k, value)?,
            "synthetic_size" => self.synthetic_size = parse(k, value)?,
            "dup_fraction" => self.dup_fraction = parse(k, value)?,
            "dup_noise" => self.dup_noise = parse(k, value)?,
            "blend" => self.blend = parse(k, value)?,
            _ => return Err(HalError::Config(format!("unknown config key `{k}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HalError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        self.apply_text(&fs::read_to_string(path)?)
    }

    /// `key = value` text that reproduces this config through [`Self::apply_text`].
    pub fn to_text(&self) -> String {
        let model = match self.model {
            ModelKind::LeNet => "lenet",
            ModelKind::Mlp => "mlp",
        };
        let retrain = match self.retrain {
            RetrainMode::Scratch => "scratch",
            RetrainMode::Finetune => "finetune",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("episodes", self.episodes.to_string()),
            ("steps", self.steps.to_string()),
            ("batch", self.batch.to_string()),
            ("pool_size", self.pool_size.to_string()),
            ("initial_labeled", self.initial_labeled.to_string()),
            ("validation", self.validation.to_string()),
            ("gamma", self.gamma.to_string()),
            ("policy_lr", self.policy_lr.to_string()),
            ("policy_hidden", join(&self.policy_hidden)),
            ("clip_lo", self.clip_lo.to_string()),
            ("clip_hi", self.clip_hi.to_string()),
            ("pg_baseline", self.pg_baseline.to_string()),
            ("pg_updates", self.pg_updates.to_string()),
            ("replay_capacity", self.replay_capacity.to_string()),
            ("n_mc", self.n_mc.to_string()),
            ("model", model.to_string()),
            ("mlp_hidden", self.mlp_hidden.to_string()),
            ("input_size", self.input_size.to_string()),
            ("dropout", self.dropout.to_string()),
            ("epochs", self.epochs.to_string()),
            ("finetune_epochs", self.finetune_epochs.to_string()),
            ("clf_batch", self.clf_batch.to_string()),
            ("clf_lr", self.clf_lr.to_string()),
            ("retrain", retrain.to_string()),
            ("representation", self.representation.to_string()),
            ("use_uncertainty", self.use_uncertainty.to_string()),
            ("use_diversity", self.use_diversity.to_string()),
            ("use_prior", self.use_prior.to_string()),
            ("use_bias_aware", self.use_bias_aware.to_string()),
            ("seed", self.seed.to_string()),
            ("repeats", self.repeats.to_string()),
            ("synthetic_size", self.synthetic_size.to_string()),
            ("dup_fraction", self.dup_fraction.to_string()),
            ("dup_noise", self.dup_noise.to_string()),
            ("blend", self.blend.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("episodes", self.episodes),
            ("steps", self.steps),
            ("batch", self.batch),
            ("pool_size", self.pool_size),
            ("initial_labeled", self.initial_labeled),
            ("validation", self.validation),
            ("n_mc", self.n_mc),
            ("input_size", self.input_size),
            ("clf_batch", self.clf_batch),
            ("repeats", self.repeats),
            ("replay_capacity", self.replay_capacity),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(HalError::Config(format!("`{k}` must be positive")));
        }
        if self.pool_size < self.steps * self.batch {
            return Err(HalError::Config(format!(
                "pool_size {} is smaller than steps x batch = {}",
                self.pool_size,
                self.steps * self.batch
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(HalError::Config("gamma must lie in (0, 1]".into()));
        }
        if !(self.policy_lr > 0.0 && self.clf_lr > 0.0) {
            return Err(HalError::Config("learning rates must be positive".into()));
        }
        if !(self.clip_lo > 0.0 && self.clip_lo <= 1.0 && self.clip_hi >= 1.0) {
            return Err(HalError::Config("clip bounds must satisfy 0 < clip_lo <= 1 <= clip_hi".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(HalError::Config("dropout must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.dup_fraction) || !(self.dup_noise >= 0.0) {
            return Err(HalError::Config("need 0 <= dup_fraction < 1 and dup_noise >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.blend) {
            return Err(HalError::Config("blend must lie in [0, 1]".into()));
        }
        if self.policy_hidden.contains(&0) || (self.model == ModelKind::Mlp && self.mlp_hidden == 0) {
            return Err(HalError::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }

    /// Total labels queried per episode.
    pub fn budget(&self) -> usize {
        self.steps * self.batch
    }

    pub fn toggles(&self) -> FeatureToggles {
        FeatureToggles {
            uncertainty: self.use_uncertainty,
            diversity: self.use_diversity,
            prior: self.use_prior,
            bias_aware: self.use_bias_aware,
        }
    }

    pub fn pg(&self) -> PgConfig {
        PgConfig {
            lr: self.policy_lr,
            gamma: self.gamma,
            clip: (self.clip_lo, self.clip_hi),
            baseline: self.pg_baseline,
        }
    }

    /// Classifier architecture on single-channel `input_size` squares.
    pub fn model_spec(&self, classes: usize) -> Result<ModelSpec> {
        let shape = Shape::new(1, self.input_size, self.input_size);
        match self.model {
            ModelKind::LeNet => ModelSpec::lenet_lite(shape, classes, self.dropout),
            ModelKind::Mlp => ModelSpec::mlp(shape, &[self.mlp_hidden], classes, self.dropout),
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            finetune_epochs: self.finetune_epochs,
            batch_size: self.clf_batch,
            lr: self.clf_lr,
            seed,
            mode: RetrainMode::Scratch,
        }
    }
}
