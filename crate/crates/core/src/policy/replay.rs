use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use super::tournament::Trajectory;
use crate::error::{HalError, Result};

/// Trajectories selected in one query step with the step's shared reward.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub reward: f64,
    pub trajectories: Vec<Trajectory>,
}

/// Step records bounded by total trajectory count; whole records are
/// evicted oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    records: VecDeque<StepRecord>,
    trajectories: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            records: VecDeque::new(),
            trajectories: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, record: StepRecord) -> Result<()> {
        if !record.reward.is_finite() {
            return Err(HalError::NonFinite("reward"));
        }
        for t in &record.trajectories {
            if let Some(x) = t.transitions.iter().find(|x| !(x.behavior_prob > 0.0 && x.behavior_prob <= 1.0)) {
                return Err(HalError::InvalidArgument(format!(
                    "behavior probability {} outside (0, 1]",
                    x.behavior_prob
                )));
            }
        }
        self.trajectories += record.trajectories.len();
        self.records.push_back(record);
        while self.trajectories > self.capacity && self.records.len() > 1 {
            let old = self.records.pop_front().expect("nonempty");
            self.trajectories -= old.trajectories.len();
        }
        Ok(())
    }

    pub fn records(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter()
    }

    pub fn trajectory_count(&self) -> usize {
        self.trajectories
    }

    pub fn transition_count(&self) -> usize {
        self.records
            .iter()
            .flat_map(|r| &r.trajectories)
            .map(|t| t.transitions.len())
            .sum()
    }

    /// Distinct episodes currently held.
    pub fn episode_count(&self) -> usize {
        self.records.iter().map(|r| r.episode).collect::<BTreeSet<_>>().len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One row per stored transition:
    /// `episode,step,depth,action,behavior_prob,reward`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["episode", "step", "depth", "action", "behavior_prob", "reward"])?;
        for r in &self.records {
            for t in &r.trajectories {
                for x in &t.transitions {
                    out.write_record([
                        r.episode.to_string(),
                        r.step.to_string(),
                        x.depth.to_string(),
                        x.action.to_string(),
                        x.behavior_prob.to_string(),
                        r.reward.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}
