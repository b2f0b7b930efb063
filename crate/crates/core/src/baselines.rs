//! Comparison query strategies: random, max-entropy, MC-dropout mutual
//! information and greedy k-center. Score ties go to the lower pool index.

use rand::seq::SliceRandom;

use crate::classifier::Classifier;
use crate::data::{ImageStore, PoolState};
use crate::error::{HalError, Result};
use crate::features::{entropy, mutual_information};
use crate::seed;

/// Selected pool indices in selection order with the score each was
/// ranked by.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

fn check_size(pool: &PoolState, b: usize) -> Result<()> {
    if pool.unlabeled().len() < b {
        return Err(HalError::Insufficient(format!(
            "{} unlabeled items for a batch of {b}",
            pool.unlabeled().len()
        )));
    }
    Ok(())
}

/// Highest `b` scores, ties to the lower index.
fn top_b(mut scored: Vec<(usize, f64)>, b: usize) -> QueryResult {
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    scored.truncate(b);
    QueryResult {
        indices: scored.iter().map(|s| s.0).collect(),
        scores: scored.iter().map(|s| s.1).collect(),
    }
}

pub fn random_query(pool: &PoolState, b: usize, seed: u64) -> Result<QueryResult> {
    check_size(pool, b)?;
    let mut rng = seed::rng(seed);
    let mut items = pool.unlabeled().to_vec();
    let (picked, _) = items.partial_shuffle(&mut rng, b);
    Ok(QueryResult {
        indices: picked.to_vec(),
        scores: vec![0.0; b],
    })
}

pub fn entropy_query(pool: &PoolState, store: &ImageStore, clf: &Classifier, b: usize) -> Result<QueryResult> {
    check_size(pool, b)?;
    let u = pool.unlabeled();
    let probs = clf.predict(store, u)?;
    Ok(top_b(u.iter().copied().zip(probs.iter().map(|p| entropy(p))).collect(), b))
}

/// Ranks by MC-dropout mutual information; item `i` uses MC seed
/// `derive(seed, "item", i)`.
pub fn dbal_query(
    pool: &PoolState,
    store: &ImageStore,
    clf: &Classifier,
    b: usize,
    n_mc: usize,
    seed: u64,
) -> Result<QueryResult> {
    check_size(pool, b)?;
    let u = pool.unlabeled();
    let scored = clf
        .analyze(store, u, n_mc, seed)?
        .into_iter()
        .zip(u)
        .map(|(a, &i)| Ok((i, mutual_information(&a.prediction.clean, &a.prediction.noisy)?)))
        .collect::<Result<_>>()?;
    Ok(top_b(scored, b))
}

pub fn kcenter_query(pool: &PoolState, store: &ImageStore, clf: &Classifier, b: usize) -> Result<QueryResult> {
    if pool.labeled().is_empty() {
        return Err(HalError::Empty("labeled set"));
    }
    check_size(pool, b)?;
    let centers = clf.embed_indices(store, pool.labeled())?;
    let u = pool.unlabeled();
    let cand: Vec<(usize, Vec<f64>)> = u.iter().copied().zip(clf.embed_indices(store, u)?).collect();
    Ok(kcenter_greedy(&centers, &cand, b))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Farthest-first selection: repeatedly take the candidate whose nearest
/// center is farthest away and make it a center. Scores are the Euclidean
/// distances at selection time.
pub fn kcenter_greedy(centers: &[Vec<f64>], candidates: &[(usize, Vec<f64>)], b: usize) -> QueryResult {
    let mut cand: Vec<&(usize, Vec<f64>)> = candidates.iter().collect();
    cand.sort_by_key(|c| c.0);
    let mut nearest: Vec<f64> = cand
        .iter()
        .map(|(_, e)| centers.iter().map(|c| sq_dist(e, c)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut taken = vec![false; cand.len()];
    let mut out = QueryResult {
        indices: Vec::with_capacity(b),
        scores: Vec::with_capacity(b),
    };
    for _ in 0..b.min(cand.len()) {
        let mut best: Option<usize> = None;
        for k in 0..cand.len() {
            if !taken[k] && best.is_none_or(|j| nearest[k] > nearest[j]) {
                best = Some(k);
            }
        }
        let k = best.expect("a candidate remains");
        taken[k] = true;
        out.indices.push(cand[k].0);
        out.scores.push(nearest[k].sqrt());
        let chosen = &cand[k].1;
        for j in 0..cand.len() {
            if !taken[j] {
                nearest[j] = nearest[j].min(sq_dist(&cand[j].1, chosen));
            }
        }
    }
    out
}
