use crate::classifier::Classifier;
use crate::data::ImageStore;
use crate::error::{HalError, Result};

use super::hog::{hog_prior, HOG_LEN};
use super::stats::{bias_aware, diversity, mutual_information, ClassStats};

/// Which observation components are live. Disabled components are zeroed,
/// so the flattened length never changes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FeatureToggles {
    pub uncertainty: bool,
    pub diversity: bool,
    pub prior: bool,
    pub bias_aware: bool,
}

impl Default for FeatureToggles {
    fn default() -> Self {
        Self::all(true)
    }
}

impl FeatureToggles {
    pub fn all(on: bool) -> Self {
        Self {
            uncertainty: on,
            diversity: on,
            prior: on,
            bias_aware: on,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub uncertainty: f64,
    pub diversity: Vec<f64>,
    pub prior: Vec<f64>,
    pub bias_aware: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        1 + self.diversity.len() + self.prior.len() + self.bias_aware.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Expected flattened length for `classes` classes.
    pub fn len_for(classes: usize) -> usize {
        1 + 2 * classes + HOG_LEN
    }

    pub fn write_into(&self, out: &mut Vec<f64>) {
        out.push(self.uncertainty);
        out.extend_from_slice(&self.diversity);
        out.extend_from_slice(&self.prior);
        out.extend_from_slice(&self.bias_aware);
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        self.write_into(&mut v);
        v
    }

    fn masked(mut self, t: FeatureToggles) -> Self {
        if !t.uncertainty {
            self.uncertainty = 0.0;
        }
        if !t.diversity {
            self.diversity.iter_mut().for_each(|v| *v = 0.0);
        }
        if !t.prior {
            self.prior.iter_mut().for_each(|v| *v = 0.0);
        }
        if !t.bias_aware {
            self.bias_aware.iter_mut().for_each(|v| *v = 0.0);
        }
        self
    }
}

fn prior_for(store: &ImageStore, index: usize, priors: Option<&[Vec<f64>]>) -> Result<Vec<f64>> {
    match priors {
        Some(p) => p
            .get(index)
            .cloned()
            .ok_or_else(|| HalError::InvalidArgument(format!("no cached prior for item {index}"))),
        None => {
            let s = store.shape();
            hog_prior(&store.luminance(index), s.height, s.width)
        }
    }
}

/// Observation of one stored item. MC-dropout pass `i` uses seed
/// `derive(seed, "mc", i)`. `priors`, when given, is a per-item HOG table
/// for `store`.
pub fn observe(
    clf: &Classifier,
    stats: &ClassStats,
    store: &ImageStore,
    index: usize,
    priors: Option<&[Vec<f64>]>,
    n_mc: usize,
    seed: u64,
    toggles: FeatureToggles,
) -> Result<Observation> {
    let x = clf.prepare(store, index)?;
    let mc = clf.mc_dropout_predict(&x, n_mc, seed)?;
    let embedding = clf.embed(&x)?;
    Ok(Observation {
        uncertainty: mutual_information(&mc.clean, &mc.noisy)?,
        diversity: diversity(&embedding, stats)?,
        prior: prior_for(store, index, priors)?,
        bias_aware: bias_aware(stats),
    }
    .masked(toggles))
}

/// Observations for many items in batched forwards. Item `indices[k]`
/// matches [`observe`] called with seed `derive(seed, "item", indices[k])`.
pub fn observe_pool(
    clf: &Classifier,
    stats: &ClassStats,
    store: &ImageStore,
    indices: &[usize],
    priors: Option<&[Vec<f64>]>,
    n_mc: usize,
    seed: u64,
    toggles: FeatureToggles,
) -> Result<Vec<Observation>> {
    let ba = bias_aware(stats);
    clf.analyze(store, indices, n_mc, seed)?
        .into_iter()
        .zip(indices)
        .map(|(a, &i)| {
            Ok(Observation {
                uncertainty: mutual_information(&a.prediction.clean, &a.prediction.noisy)?,
                diversity: diversity(&a.embedding, stats)?,
                prior: prior_for(store, i, priors)?,
                bias_aware: ba.clone(),
            }
            .masked(toggles))
        })
        .collect()
}
