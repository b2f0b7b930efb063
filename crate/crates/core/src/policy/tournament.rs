use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use super::net::{clamp_prob, Comparator};
use crate::error::{HalError, Result};
use crate::features::Observation;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectMode {
    /// Draw each match outcome from the comparator's probabilities.
    Sample,
    /// Take the likelier action; ties go to the left candidate.
    Greedy,
}

/// A pool index with its observation.
pub type Candidate = (usize, Arc<Observation>);

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub left: Arc<Observation>,
    pub right: Arc<Observation>,
    pub action: usize,
    /// Clamped probability of `action` when it was taken.
    pub behavior_prob: f64,
    /// Tournament round the match was played in, 0 for the first.
    pub depth: usize,
}

/// The winner's matches from its first round to the final.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub winner: usize,
    pub comparisons: usize,
}

struct Entrant {
    slot: usize,
    path: Vec<Transition>,
}

/// Single-elimination tournament over the candidates after a seeded
/// shuffle. Adjacent entrants meet each round; an odd one out at the end
/// advances without playing.
pub fn run_tournament<C: Comparator + ?Sized>(
    cmp: &C,
    candidates: &[Candidate],
    seed: u64,
    mode: SelectMode,
) -> Result<Trajectory> {
    if candidates.is_empty() {
        return Err(HalError::Empty("tournament candidates"));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(&mut rng);
    let mut alive: Vec<Entrant> = order
        .into_iter()
        .map(|slot| Entrant { slot, path: Vec::new() })
        .collect();
    let mut comparisons = 0;
    let mut depth = 0;
    while alive.len() > 1 {
        let pairs: Vec<(&Observation, &Observation)> = alive
            .chunks_exact(2)
            .map(|p| (&*candidates[p[0].slot].1, &*candidates[p[1].slot].1))
            .collect();
        let probs = cmp.compare(&pairs)?;
        if probs.len() != pairs.len() {
            return Err(HalError::Shape("comparator returned the wrong number of results".into()));
        }
        comparisons += pairs.len();
        let mut next = Vec::with_capacity(alive.len().div_ceil(2));
        let mut it = alive.into_iter();
        for p in probs {
            let (l, r) = (it.next().expect("pair"), it.next().expect("pair"));
            let action = match mode {
                SelectMode::Greedy => usize::from(p[1] > p[0]),
                SelectMode::Sample => usize::from(rng.random::<f64>() < p[1]),
            };
            let (ls, rs) = (l.slot, r.slot);
            let mut winner = if action == 0 { l } else { r };
            winner.path.push(Transition {
                left: Arc::clone(&candidates[ls].1),
                right: Arc::clone(&candidates[rs].1),
                action,
                behavior_prob: clamp_prob(p[action]),
                depth,
            });
            next.push(winner);
        }
        next.extend(it);
        alive = next;
        depth += 1;
    }
    let w = alive.pop().expect("one entrant remains");
    Ok(Trajectory {
        winner: candidates[w.slot].0,
        transitions: w.path,
        comparisons,
    })
}

/// `b` tournaments in sequence, each winner leaving the field before the
/// next. Tournament `k` is seeded with `derive(seed, "tournament", k)`.
pub fn select_batch<C: Comparator + ?Sized>(
    cmp: &C,
    candidates: &[Candidate],
    b: usize,
    seed: u64,
    mode: SelectMode,
) -> Result<(Vec<usize>, Vec<Trajectory>)> {
    if candidates.len() < b {
        return Err(HalError::Insufficient(format!(
            "{} candidates for a batch of {b}",
            candidates.len()
        )));
    }
    let mut field = candidates.to_vec();
    let mut picked = Vec::with_capacity(b);
    let mut trajectories = Vec::with_capacity(b);
    for k in 0..b {
        let t = run_tournament(cmp, &field, seed::derive(seed, "tournament", k as u64), mode)?;
        let pos = field.iter().position(|c| c.0 == t.winner).expect("winner is in the field");
        field.remove(pos);
        picked.push(t.winner);
        trajectories.push(t);
    }
    Ok((picked, trajectories))
}
