use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;

use super::config::EpisodeConfig;
use crate::data::{
    load_idx, make_domain_shift, make_duplicated_pool, synthetic_digits, ImageStore, PoolState, Provenance, SplitPlan,
};
use crate::error::Result;
use crate::features::hog_priors;
use crate::seed;

/// An image store with its cached HOG priors and split constraints.
#[derive(Clone, Debug)]
pub struct Datasets {
    pub store: Arc<ImageStore>,
    pub priors: Arc<Vec<Vec<f64>>>,
    /// Fixed validation set; drawn per split seed when `None`.
    pub validation: Option<Vec<usize>>,
    /// Items the initial labeled set may come from; any when `None`.
    pub labeled_from: Option<Vec<usize>>,
}

impl Datasets {
    pub fn new(store: ImageStore) -> Result<Self> {
        let priors = hog_priors(&store)?;
        Ok(Self {
            store: Arc::new(store),
            priors: Arc::new(priors),
            validation: None,
            labeled_from: None,
        })
    }

    pub fn split(&self, cfg: &EpisodeConfig, seed: u64) -> Result<PoolState> {
        SplitPlan {
            n_labeled: cfg.initial_labeled,
            n_val: cfg.validation,
            pool_size: Some(cfg.pool_size),
            labeled_from: self.labeled_from.as_deref(),
            validation: self.validation.as_deref(),
        }
        .split(&self.store, seed)
    }

    /// Holds out a clean validation set from `base`, turns the rest into a
    /// pool where `dup_fraction` of the items are noisy copies, and draws
    /// initial labels only from the originals.
    pub fn duplicated(base: &ImageStore, cfg: &EpisodeConfig, seed: u64) -> Result<Self> {
        let mut order: Vec<usize> = (0..base.len()).collect();
        order.shuffle(&mut seed::rng_for(seed, "dup-holdout", 0));
        let n_val = cfg.validation.min(base.len());
        let (val_idx, rest_idx) = order.split_at(n_val);
        let mut val_idx = val_idx.to_vec();
        let mut rest_idx = rest_idx.to_vec();
        val_idx.sort_unstable();
        rest_idx.sort_unstable();
        let pool = make_duplicated_pool(
            &base.subset(&rest_idx),
            cfg.dup_fraction,
            cfg.dup_noise,
            seed::derive(seed, "dup-pool", 0),
        )?;
        let n_pool = pool.len();
        let store = pool.concat(&base.subset(&val_idx), 0)?;
        let labeled_from = (0..n_pool)
            .filter(|&i| store.provenance(i) == Provenance::Original)
            .collect();
        let mut d = Self::new(store)?;
        d.validation = Some((n_pool..n_pool + n_val).collect());
        d.labeled_from = Some(labeled_from);
        Ok(d)
    }

    /// Same items and split constraints with every image colour-shifted.
    pub fn domain_shifted(&self, blend: f64, seed: u64) -> Result<Self> {
        let mut d = Self::new(make_domain_shift(&self.store, blend, seed)?)?;
        d.validation = self.validation.clone();
        d.labeled_from = self.labeled_from.clone();
        Ok(d)
    }
}

/// IDX training files from `data_dir` (plus the `t10k` pair when present),
/// or the synthetic digit set when no directory is given.
pub fn load_store(data_dir: Option<&Path>, cfg: &EpisodeConfig) -> Result<ImageStore> {
    match data_dir {
        Some(dir) => {
            let train = load_idx(dir.join("train-images-idx3-ubyte"), dir.join("train-labels-idx1-ubyte"))?;
            let (ti, tl) = (dir.join("t10k-images-idx3-ubyte"), dir.join("t10k-labels-idx1-ubyte"));
            if ti.exists() && tl.exists() {
                train.concat(&load_idx(ti, tl)?, train.len())
            } else {
                Ok(train)
            }
        }
        None => synthetic_digits(cfg.synthetic_size, 0),
    }
}
