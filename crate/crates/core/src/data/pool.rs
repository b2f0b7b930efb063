use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::store::ImageStore;
use crate::error::{HalError, Result};
use crate::seed;

/// Labeled, unlabeled and validation index sets over one [`ImageStore`].
/// The sets are kept pairwise disjoint; querying moves indices from the
/// unlabeled pool to the labeled set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoolState {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
    validation: Vec<usize>,
}

impl PoolState {
    pub fn new(labeled: Vec<usize>, unlabeled: Vec<usize>, validation: Vec<usize>) -> Result<Self> {
        let s = Self {
            labeled,
            unlabeled,
            validation,
        };
        s.check_disjoint()?;
        Ok(s)
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn validation(&self) -> &[usize] {
        &self.validation
    }

    /// Verifies that no index appears twice across (or within) the sets.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.labeled.len() + self.unlabeled.len() + self.validation.len());
        for &i in self.labeled.iter().chain(&self.unlabeled).chain(&self.validation) {
            if !seen.insert(i) {
                return Err(HalError::InvalidArgument(format!("index {i} appears in more than one set")));
            }
        }
        Ok(())
    }

    /// Moves `indices` (distinct, all unlabeled) into the labeled set, in order.
    pub fn query(&mut self, indices: &[usize]) -> Result<()> {
        let wanted: HashSet<usize> = indices.iter().copied().collect();
        if wanted.len() != indices.len() {
            return Err(HalError::InvalidArgument("query contains repeated indices".into()));
        }
        let present = self.unlabeled.iter().filter(|i| wanted.contains(i)).count();
        if present != indices.len() {
            return Err(HalError::InvalidArgument("query index not in the unlabeled pool".into()));
        }
        self.unlabeled.retain(|i| !wanted.contains(i));
        self.labeled.extend_from_slice(indices);
        Ok(())
    }
}

/// Seeded class-proportional sample of `n` items from `candidates`
/// (largest-remainder allocation, remainder ties to lower classes).
pub fn stratified_sample(store: &ImageStore, candidates: &[usize], n: usize, seed: u64) -> Result<Vec<usize>> {
    if n > candidates.len() {
        return Err(HalError::Insufficient(format!(
            "cannot sample {n} items from {}",
            candidates.len()
        )));
    }
    let mut by_class = vec![Vec::new(); store.classes()];
    for &i in candidates {
        by_class[store.label(i)].push(i);
    }
    let total = candidates.len() as f64;
    let mut quota: Vec<usize> = by_class
        .iter()
        .map(|c| (n as f64 * c.len() as f64 / total).floor() as usize)
        .collect();
    let mut rest = n - quota.iter().sum::<usize>();
    let mut frac: Vec<(usize, f64)> = by_class
        .iter()
        .enumerate()
        .map(|(k, c)| (k, n as f64 * c.len() as f64 / total - quota[k] as f64))
        .collect();
    frac.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (k, _) in frac {
        if rest == 0 {
            break;
        }
        if quota[k] < by_class[k].len() {
            quota[k] += 1;
            rest -= 1;
        }
    }
    let mut rng = seed::rng_for(seed, "stratified", 0);
    let mut out = Vec::with_capacity(n);
    for (k, members) in by_class.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        out.extend_from_slice(&members[..quota[k]]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Balanced labeled set (`n_labeled / L` per class), then a validation set
/// drawn uniformly from the rest; the remainder is the unlabeled pool.
pub fn make_splits(store: &ImageStore, n_labeled: usize, n_val: usize, seed: u64) -> Result<PoolState> {
    make_splits_sized(store, n_labeled, n_val, None, seed)
}

/// Like [`make_splits`], optionally restricting the unlabeled pool to a
/// stratified subsample of `pool_size` items.
pub fn make_splits_sized(
    store: &ImageStore,
    n_labeled: usize,
    n_val: usize,
    pool_size: Option<usize>,
    seed: u64,
) -> Result<PoolState> {
    SplitPlan {
        n_labeled,
        n_val,
        pool_size,
        ..SplitPlan::default()
    }
    .split(store, seed)
}

/// Split recipe. With neither restriction set this is [`make_splits_sized`].
#[derive(Clone, Debug, Default)]
pub struct SplitPlan<'a> {
    pub n_labeled: usize,
    pub n_val: usize,
    pub pool_size: Option<usize>,
    /// Items the labeled set may be drawn from (all when `None`).
    pub labeled_from: Option<&'a [usize]>,
    /// Fixed validation set used instead of a random draw; `n_val` is
    /// ignored when set.
    pub validation: Option<&'a [usize]>,
}

impl SplitPlan<'_> {
    pub fn split(&self, store: &ImageStore, seed: u64) -> Result<PoolState> {
        let classes = store.classes();
        let n_labeled = self.n_labeled;
        if n_labeled == 0 {
            return Err(HalError::InvalidArgument("the labeled set must start nonempty".into()));
        }
        if !n_labeled.is_multiple_of(classes) {
            return Err(HalError::InvalidArgument(format!(
                "{n_labeled} labeled items cannot be split evenly over {classes} classes"
            )));
        }
        let mut in_val = vec![false; store.len()];
        if let Some(v) = self.validation {
            for &i in v {
                if i >= store.len() {
                    return Err(HalError::InvalidArgument(format!("validation index {i} out of range")));
                }
                in_val[i] = true;
            }
        }
        let mut eligible = vec![self.labeled_from.is_none(); store.len()];
        if let Some(from) = self.labeled_from {
            for &i in from {
                if i >= store.len() {
                    return Err(HalError::InvalidArgument(format!("labeled candidate {i} out of range")));
                }
                eligible[i] = true;
            }
        }
        let per = n_labeled / classes;
        let mut rng = seed::rng_for(seed, "splits", 0);
        let mut labeled = Vec::with_capacity(n_labeled);
        let mut taken = in_val.clone();
        for (k, members) in store.class_indices().into_iter().enumerate() {
            let mut members: Vec<usize> = members.into_iter().filter(|&i| eligible[i] && !in_val[i]).collect();
            if members.len() < per {
                return Err(HalError::Insufficient(format!(
                    "class {k} has {} items, {per} needed for the labeled set",
                    members.len()
                )));
            }
            members.shuffle(&mut rng);
            for &i in &members[..per] {
                labeled.push(i);
                taken[i] = true;
            }
        }
        labeled.sort_unstable();
        let mut rest: Vec<usize> = (0..store.len()).filter(|&i| !taken[i]).collect();
        let validation = match self.validation {
            Some(v) => {
                let mut v = v.to_vec();
                v.sort_unstable();
                v
            }
            None => {
                if rest.len() < self.n_val {
                    return Err(HalError::Insufficient(format!(
                        "{} items left for a validation set of {}",
                        rest.len(),
                        self.n_val
                    )));
                }
                rest.shuffle(&mut rng);
                let mut v = rest[..self.n_val].to_vec();
                v.sort_unstable();
                rest.drain(..self.n_val);
                v
            }
        };
        rest.sort_unstable();
        let unlabeled = match self.pool_size {
            Some(m) => stratified_sample(store, &rest, m, seed::derive(seed, "pool", 0))?,
            None => rest,
        };
        PoolState::new(labeled, unlabeled, validation)
    }
}
