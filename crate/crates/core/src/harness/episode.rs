use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::config::EpisodeConfig;
use super::datasets::Datasets;
use super::metrics::LearningCurve;
use crate::baselines::{dbal_query, entropy_query, kcenter_query, random_query};
use crate::classifier::{Accuracy, Classifier};
use crate::data::PoolState;
use crate::error::{HalError, Result};
use crate::features::{observe_pool, ClassStats, Observation};
use crate::policy::{pg_update, select_batch, Candidate, PolicyNet, ReplayBuffer, SelectMode, StepRecord, Trajectory};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Hal,
    Random,
    Entropy,
    Dbal,
    KCenter,
}

impl Method {
    pub const BASELINES: [Method; 4] = [Self::Random, Self::Entropy, Self::Dbal, Self::KCenter];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hal => "hal",
            Self::Random => "random",
            Self::Entropy => "entropy",
            Self::Dbal => "dbal",
            Self::KCenter => "kcenter",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HalError;

    fn from_str(s: &str) -> Result<Self> {
        [Self::Hal, Self::Random, Self::Entropy, Self::Dbal, Self::KCenter]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HalError::Config(format!("unknown method `{s}`")))
    }
}

/// How an episode picks its queries.
#[derive(Clone, Copy)]
pub enum Selector<'a> {
    Policy(&'a PolicyNet, SelectMode),
    Baseline(Method),
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub selected: Vec<usize>,
    pub trajectories: Vec<Trajectory>,
    pub accuracy: Accuracy,
    /// Change in correctly classified validation items.
    pub delta_correct: i64,
    pub reward: f64,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub initial: Accuracy,
    pub steps: Vec<StepOutcome>,
    pub curve: LearningCurve,
    pub pool: PoolState,
}

impl EpisodeOutcome {
    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn final_accuracy(&self) -> Accuracy {
        self.steps.last().map_or(self.initial, |s| s.accuracy)
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().flat_map(|s| s.selected.iter().copied())
    }
}

pub fn build_classifier(cfg: &EpisodeConfig, classes: usize, seed: u64) -> Result<Classifier> {
    Classifier::new(cfg.model_spec(classes)?, classes, cfg.train_config(seed))
}

/// One active-learning run: train on the initial labels, then per step
/// select a batch, reveal its labels, retrain and record the change in
/// validation accuracy as the step reward.
pub fn run_episode(cfg: &EpisodeConfig, data: &Datasets, selector: Selector<'_>, seed: u64) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    let store = &*data.store;
    let mut pool = data.split(cfg, seed::derive(seed, "split", 0))?;
    let mut clf = build_classifier(cfg, store.classes(), seed::derive(seed, "classifier", 0))?;
    clf.train(&pool, store)?;
    clf.config_mut().mode = cfg.retrain;
    let val = pool.validation().to_vec();
    let initial = clf.evaluate(store, &val)?;
    let mut curve = LearningCurve::new();
    curve.push(pool.labeled().len(), initial.value())?;
    let mut before = initial;
    let mut steps = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps as u64 {
        let b = cfg.batch;
        let (selected, trajectories) = match selector {
            Selector::Policy(net, mode) => {
                let stats = ClassStats::compute(&clf, &pool, store, cfg.representation)?;
                let u = pool.unlabeled().to_vec();
                let obs = observe_pool(
                    &clf,
                    &stats,
                    store,
                    &u,
                    Some(&data.priors),
                    cfg.n_mc,
                    seed::derive(seed, "observe", step),
                    cfg.toggles(),
                )?;
                let cands: Vec<Candidate> = u.into_iter().zip(obs.into_iter().map(Arc::new)).collect();
                select_batch(net, &cands, b, seed::derive(seed, "select", step), mode)?
            }
            Selector::Baseline(m) => {
                let q = match m {
                    Method::Random => random_query(&pool, b, seed::derive(seed, "random", step))?,
                    Method::Entropy => entropy_query(&pool, store, &clf, b)?,
                    Method::Dbal => dbal_query(&pool, store, &clf, b, cfg.n_mc, seed::derive(seed, "dbal", step))?,
                    Method::KCenter => kcenter_query(&pool, store, &clf, b)?,
                    Method::Hal => return Err(HalError::InvalidArgument("hal needs a policy".into())),
                };
                (q.indices, Vec::new())
            }
        };
        pool.query(&selected)?;
        pool.check_disjoint()?;
        clf.train(&pool, store)?;
        let after = clf.evaluate(store, &val)?;
        let delta_correct = after.correct as i64 - before.correct as i64;
        let reward = delta_correct as f64 / val.len() as f64;
        curve.push(pool.labeled().len(), after.value())?;
        steps.push(StepOutcome {
            selected,
            trajectories,
            accuracy: after,
            delta_correct,
            reward,
        });
        before = after;
    }
    Ok(EpisodeOutcome {
        initial,
        steps,
        curve,
        pool,
    })
}

#[derive(Clone, Debug)]
pub struct PolicyTraining {
    pub policy: PolicyNet,
    /// Step rewards per episode.
    pub rewards: Vec<Vec<f64>>,
    pub buffer: ReplayBuffer,
    pub losses: Vec<f64>,
}

impl PolicyTraining {
    pub fn mean_rewards(&self) -> Vec<f64> {
        self.rewards
            .iter()
            .map(|r| r.iter().sum::<f64>() / r.len().max(1) as f64)
            .collect()
    }
}

pub fn new_policy(cfg: &EpisodeConfig, classes: usize, seed: u64) -> Result<PolicyNet> {
    PolicyNet::new(Observation::len_for(classes), &cfg.policy_hidden, seed::derive(seed, "policy-init", 0))
}

/// Sampled episodes, each followed by `pg_updates` updates over the whole
/// replay buffer. Episode `e` uses seed `derive(seed, "episode", e)`.
pub fn train_policy(cfg: &EpisodeConfig, data: &Datasets, seed: u64) -> Result<PolicyTraining> {
    cfg.validate()?;
    let mut policy = new_policy(cfg, data.store.classes(), seed)?;
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let mut rewards = Vec::with_capacity(cfg.episodes);
    let mut losses = Vec::new();
    let pg = cfg.pg();
    for ep in 0..cfg.episodes {
        let out = run_episode(
            cfg,
            data,
            Selector::Policy(&policy, SelectMode::Sample),
            seed::derive(seed, "episode", ep as u64),
        )?;
        rewards.push(out.rewards());
        for (step, s) in out.steps.into_iter().enumerate() {
            buffer.push(StepRecord {
                episode: ep,
                step,
                reward: s.reward,
                trajectories: s.trajectories,
            })?;
        }
        for _ in 0..cfg.pg_updates {
            losses.push(pg_update(&mut policy, &buffer, &pg)?);
        }
    }
    Ok(PolicyTraining {
        policy,
        rewards,
        buffer,
        losses,
    })
}

/// Validation accuracy after training on every labeled and unlabeled item
/// of the split for `seed`; the ceiling used by ALC normalization.
pub fn full_pool_accuracy(cfg: &EpisodeConfig, data: &Datasets, seed: u64) -> Result<f64> {
    let store = &*data.store;
    let split = data.split(cfg, seed::derive(seed, "split", 0))?;
    let mut all = split.labeled().to_vec();
    all.extend_from_slice(split.unlabeled());
    let full = PoolState::new(all, Vec::new(), split.validation().to_vec())?;
    let mut clf = build_classifier(cfg, store.classes(), seed::derive(seed, "classifier", 0))?;
    clf.train(&full, store)?;
    Ok(clf.evaluate(store, full.validation())?.value())
}
