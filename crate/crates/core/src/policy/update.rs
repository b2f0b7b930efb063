use super::net::{encode_pair, PolicyNet};
use super::replay::ReplayBuffer;
use crate::error::{HalError, Result};
use crate::nn::{adam_step, backward, forward, Batch, Mode, OutputGrad, Params};

#[derive(Clone, Debug, PartialEq)]
pub struct PgConfig {
    pub lr: f64,
    pub gamma: f64,
    /// Bounds on the importance ratio of current to behavior probability.
    pub clip: (f64, f64),
    /// Subtract the buffer's mean step reward before weighting.
    pub baseline: bool,
}

impl Default for PgConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            gamma: 0.9998,
            clip: (0.1, 10.0),
            baseline: false,
        }
    }
}

const CHUNK: usize = 2048;

struct Row {
    input: Vec<f64>,
    action: usize,
    behavior: f64,
    ret: f64,
}

/// Loss `-(1/N) Σ log π(a|s) · G · corr` over every stored transition, with
/// `N` the number of episodes in the buffer, `G = γ^(len-1-t) · r` counted
/// from the final match and `corr` the clipped ratio `π/π_behavior` held
/// constant. Takes one Adam step and returns the loss before the step.
pub fn pg_update(policy: &mut PolicyNet, buffer: &ReplayBuffer, cfg: &PgConfig) -> Result<f64> {
    let (loss, grads) = pg_gradient(policy, buffer, cfg)?;
    let (_, params, adam) = policy.parts_mut();
    adam_step(params, &grads, adam, cfg.lr)?;
    Ok(loss)
}

/// The loss of [`pg_update`] and its gradient with respect to the policy
/// parameters.
pub fn pg_gradient(policy: &PolicyNet, buffer: &ReplayBuffer, cfg: &PgConfig) -> Result<(f64, Params)> {
    if buffer.is_empty() {
        return Err(HalError::Empty("replay buffer"));
    }
    let baseline = if cfg.baseline {
        let (s, n) = buffer.records().fold((0.0, 0usize), |(s, n), r| (s + r.reward, n + 1));
        s / n as f64
    } else {
        0.0
    };
    let mut rows = Vec::with_capacity(buffer.transition_count());
    for rec in buffer.records() {
        let r = rec.reward - baseline;
        for t in &rec.trajectories {
            let len = t.transitions.len();
            for (i, x) in t.transitions.iter().enumerate() {
                if !(x.behavior_prob > 0.0) {
                    return Err(HalError::InvalidArgument("behavior probability of 0".into()));
                }
                let mut input = Vec::with_capacity(2 * policy.obs_len());
                encode_pair(&x.left, &x.right, &mut input);
                rows.push(Row {
                    input,
                    action: x.action,
                    behavior: x.behavior_prob,
                    ret: cfg.gamma.powi((len - 1 - i) as i32) * r,
                });
            }
        }
    }
    let n = buffer.episode_count() as f64;
    let (spec, params) = (policy.spec(), policy.params());
    let mut grads = Params::zeros(spec);
    let mut loss = 0.0;
    for chunk in rows.chunks(CHUNK) {
        let width = spec.input().len();
        let mut data = Vec::with_capacity(chunk.len() * width);
        for r in chunk {
            if r.input.len() != width {
                return Err(HalError::Shape(format!(
                    "stored state has {} values, policy expects {width}",
                    r.input.len()
                )));
            }
            data.extend_from_slice(&r.input);
        }
        let fwd = forward(spec, params, &Batch::new(chunk.len(), data), Mode::Eval, 0)?;
        let mut g = vec![0.0; chunk.len() * 2];
        for (k, r) in chunk.iter().enumerate() {
            let p = &fwd.output[2 * k..2 * k + 2];
            let pa = p[r.action];
            let corr = (pa / r.behavior).clamp(cfg.clip.0, cfg.clip.1);
            let w = r.ret * corr / n;
            loss -= w * pa.max(1e-300).ln();
            for j in 0..2 {
                let onehot = if j == r.action { 1.0 } else { 0.0 };
                g[2 * k + j] = -w * (onehot - p[j]);
            }
        }
        let part = backward(spec, params, &fwd.cache, OutputGrad::PreSoftmax(&g))?;
        grads.add_scaled(&part, 1.0);
    }
    if !loss.is_finite() {
        return Err(HalError::NonFinite("policy loss"));
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Observation;
    use crate::policy::{StepRecord, Trajectory, Transition};
    use std::sync::Arc;

    fn o(v: f64) -> Arc<Observation> {
        Arc::new(Observation {
            uncertainty: v,
            diversity: vec![0.5 * v, -v],
            prior: vec![],
            bias_aware: vec![0.2, 0.1],
        })
    }

    fn buffer_with(reward: f64, behavior: f64) -> ReplayBuffer {
        let mut b = ReplayBuffer::new(100);
        b.push(StepRecord {
            episode: 0,
            step: 0,
            reward,
            trajectories: vec![Trajectory {
                transitions: vec![Transition {
                    left: o(0.3),
                    right: o(0.8),
                    action: 1,
                    behavior_prob: behavior,
                    depth: 0,
                }],
                winner: 1,
                comparisons: 1,
            }],
        })
        .unwrap();
        b
    }

    fn trained_net() -> PolicyNet {
        // nonzero output layer so gradients reach every layer
        let mut net = PolicyNet::new(5, &[6], 3).unwrap();
        let (spec, params, _) = net.parts_mut();
        let fresh = Params::init(spec, 11);
        let n = params.tensors.len();
        params.tensors[n - 2] = fresh.tensors[n - 2].clone();
        params.tensors[n - 1].data = vec![0.05, -0.02];
        net
    }

    #[test]
    fn zero_reward_leaves_policy() {
        let mut net = trained_net();
        let before = net.params().clone();
        let loss = pg_update(&mut net, &buffer_with(0.0, 0.5), &PgConfig::default()).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net.params(), &before);
    }

    #[test]
    fn empty_buffer_is_an_error() {
        let mut net = trained_net();
        assert!(pg_update(&mut net, &ReplayBuffer::new(4), &PgConfig::default()).is_err());
    }

    #[test]
    fn positive_reward_raises_taken_action() {
        let mut net = trained_net();
        let (l, r) = (o(0.3), o(0.8));
        let cfg = PgConfig {
            lr: 0.01,
            gamma: 1.0,
            ..PgConfig::default()
        };
        let mut last = net.policy_prob(&l, &r).unwrap()[1];
        for _ in 0..30 {
            let buf = buffer_with(1.0, last);
            pg_update(&mut net, &buf, &cfg).unwrap();
            let p = net.policy_prob(&l, &r).unwrap()[1];
            assert!(p > last || p > 1.0 - 1e-9);
            last = p;
        }
        assert!(last > 0.9);
    }
}
