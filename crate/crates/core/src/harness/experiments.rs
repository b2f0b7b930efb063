use std::collections::HashMap;

use super::config::EpisodeConfig;
use super::datasets::Datasets;
use super::episode::{full_pool_accuracy, run_episode, train_policy, EpisodeOutcome, Method, Selector};
use super::metrics::{alc_norm, sign_test, LearningCurve};
use crate::data::ImageStore;
use crate::error::{HalError, Result};
use crate::features::Representation;
use crate::policy::{PolicyNet, SelectMode};
use crate::seed;

/// Seed of evaluation repeat `r`. Distinct from training episode seeds.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    seed::derive(seed, "repeat", r as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRecord {
    pub method: String,
    pub seed: u64,
    pub curve: LearningCurve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlcRecord {
    pub variant: String,
    pub repeat: usize,
    pub alc_norm: f64,
}

fn run_method(
    cfg: &EpisodeConfig,
    data: &Datasets,
    method: Method,
    policy: Option<&PolicyNet>,
    seed: u64,
) -> Result<EpisodeOutcome> {
    let selector = match method {
        Method::Hal => Selector::Policy(
            policy.ok_or_else(|| HalError::InvalidArgument("hal needs a policy".into()))?,
            SelectMode::Greedy,
        ),
        m => Selector::Baseline(m),
    };
    run_episode(cfg, data, selector, seed)
}

/// Curves for each method over `cfg.repeats` matched-seed repeats.
pub fn evaluate_methods(
    cfg: &EpisodeConfig,
    data: &Datasets,
    policy: Option<&PolicyNet>,
    methods: &[Method],
    seed: u64,
) -> Result<Vec<CurveRecord>> {
    let mut out = Vec::new();
    for r in 0..cfg.repeats {
        let s = repeat_seed(seed, r);
        for &m in methods {
            out.push(CurveRecord {
                method: m.name().to_string(),
                seed: s,
                curve: run_method(cfg, data, m, policy, s)?.curve,
            });
        }
    }
    Ok(out)
}

/// Random-baseline curves and full-pool ceilings, computed once per repeat.
struct Reference<'a> {
    cfg: &'a EpisodeConfig,
    data: &'a Datasets,
    random: HashMap<u64, LearningCurve>,
    a_max: HashMap<u64, f64>,
}

impl<'a> Reference<'a> {
    fn new(cfg: &'a EpisodeConfig, data: &'a Datasets) -> Self {
        Self {
            cfg,
            data,
            random: HashMap::new(),
            a_max: HashMap::new(),
        }
    }

    fn random(&mut self, s: u64) -> Result<LearningCurve> {
        if let Some(c) = self.random.get(&s) {
            return Ok(c.clone());
        }
        let c = run_method(self.cfg, self.data, Method::Random, None, s)?.curve;
        self.random.insert(s, c.clone());
        Ok(c)
    }

    fn a_max(&mut self, s: u64) -> Result<f64> {
        if let Some(&a) = self.a_max.get(&s) {
            return Ok(a);
        }
        let a = full_pool_accuracy(self.cfg, self.data, s)?;
        self.a_max.insert(s, a);
        Ok(a)
    }

    fn alc(&mut self, curve: &LearningCurve, s: u64) -> Result<f64> {
        let r = self.random(s)?;
        let a = self.a_max(s)?;
        alc_norm(curve, &r, a)
    }
}

/// Trains one policy per class-center representation (same seed) and
/// scores each over matched repeats.
pub fn run_ablation_representation(cfg: &EpisodeConfig, data: &Datasets, seed: u64) -> Result<Vec<AlcRecord>> {
    let mut reference = Reference::new(cfg, data);
    let mut out = Vec::new();
    for rep in Representation::ALL {
        let c = EpisodeConfig {
            representation: rep,
            ..cfg.clone()
        };
        let policy = train_policy(&c, data, seed)?.policy;
        for r in 0..cfg.repeats {
            let s = repeat_seed(seed, r);
            let curve = run_method(&c, data, Method::Hal, Some(&policy), s)?.curve;
            out.push(AlcRecord {
                variant: rep.name().to_string(),
                repeat: r,
                alc_norm: reference.alc(&curve, s)?,
            });
        }
    }
    Ok(out)
}

/// Mean of `alc_norm` per variant, in first-seen order.
pub fn mean_by_variant(rows: &[AlcRecord]) -> Vec<(String, f64)> {
    let mut order: Vec<String> = Vec::new();
    let mut sums: HashMap<&str, (f64, usize)> = HashMap::new();
    for r in rows {
        let e = sums.entry(&r.variant).or_insert_with(|| {
            order.push(r.variant.clone());
            (0.0, 0)
        });
        e.0 += r.alc_norm;
        e.1 += 1;
    }
    order
        .into_iter()
        .map(|v| {
            let (s, n) = sums[v.as_str()];
            (v, s / n as f64)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BiasAwareAblation {
    pub curves: Vec<CurveRecord>,
    /// Label count the comparison is made at.
    pub labels: usize,
    pub with: Vec<f64>,
    pub without: Vec<f64>,
    /// One-sided sign test of `with > without`, ties dropped.
    pub p_value: f64,
}

/// Label count nearest to 100 on a curve grid.
fn comparison_point(cfg: &EpisodeConfig) -> usize {
    let grid: Vec<usize> = (0..=cfg.steps).map(|k| cfg.initial_labeled + k * cfg.batch).collect();
    *grid.iter().min_by_key(|&&l| l.abs_diff(100)).expect("nonempty grid")
}

pub fn run_ablation_bias_aware(cfg: &EpisodeConfig, data: &Datasets, seed: u64) -> Result<BiasAwareAblation> {
    let labels = comparison_point(cfg);
    let mut curves = Vec::new();
    let mut acc = [Vec::new(), Vec::new()];
    for (k, (name, on)) in [("hal-ba", true), ("hal-noba", false)].into_iter().enumerate() {
        let c = EpisodeConfig {
            use_bias_aware: on,
            ..cfg.clone()
        };
        let policy = train_policy(&c, data, seed)?.policy;
        for r in 0..cfg.repeats {
            let s = repeat_seed(seed, r);
            let curve = run_method(&c, data, Method::Hal, Some(&policy), s)?.curve;
            acc[k].push(curve.accuracy_at(labels).expect("grid point"));
            curves.push(CurveRecord {
                method: name.to_string(),
                seed: s,
                curve,
            });
        }
    }
    let [with, without] = acc;
    let wins = with.iter().zip(&without).filter(|(a, b)| a > b).count();
    let losses = with.iter().zip(&without).filter(|(a, b)| a < b).count();
    Ok(BiasAwareAblation {
        curves,
        labels,
        p_value: sign_test(wins, losses),
        with,
        without,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuplicateRecord {
    pub method: String,
    pub seed: u64,
    pub selected: usize,
    pub duplicates: usize,
}

impl DuplicateRecord {
    pub fn fraction(&self) -> f64 {
        self.duplicates as f64 / self.selected as f64
    }
}

#[derive(Clone, Debug)]
pub struct DuplicatedReport {
    pub curves: Vec<CurveRecord>,
    pub duplicates: Vec<DuplicateRecord>,
    pub alc: Vec<AlcRecord>,
    /// One-sided sign test of HAL selecting fewer duplicates than random.
    pub p_value: f64,
}

/// Policy trained and evaluated on a pool where `dup_fraction` of items are
/// noisy copies; compares duplicate share and ALC against random.
pub fn run_duplicated(cfg: &EpisodeConfig, base: &ImageStore, seed: u64) -> Result<DuplicatedReport> {
    let data = Datasets::duplicated(base, cfg, seed::derive(seed, "duplicated", 0))?;
    let policy = train_policy(cfg, &data, seed)?.policy;
    let mut reference = Reference::new(cfg, &data);
    let mut report = DuplicatedReport {
        curves: Vec::new(),
        duplicates: Vec::new(),
        alc: Vec::new(),
        p_value: 1.0,
    };
    let (mut wins, mut losses) = (0, 0);
    for r in 0..cfg.repeats {
        let s = repeat_seed(seed, r);
        let hal = run_method(cfg, &data, Method::Hal, Some(&policy), s)?;
        let rnd = run_method(cfg, &data, Method::Random, None, s)?;
        let mut fr = [0.0; 2];
        for (k, (name, out)) in [("hal", &hal), ("random", &rnd)].into_iter().enumerate() {
            let sel: Vec<usize> = out.selected().collect();
            let rec = DuplicateRecord {
                method: name.to_string(),
                seed: s,
                selected: sel.len(),
                duplicates: sel.iter().filter(|&&i| data.store.is_duplicate(i)).count(),
            };
            fr[k] = rec.fraction();
            report.duplicates.push(rec);
            report.alc.push(AlcRecord {
                variant: name.to_string(),
                repeat: r,
                alc_norm: reference.alc(&out.curve, s)?,
            });
            report.curves.push(CurveRecord {
                method: name.to_string(),
                seed: s,
                curve: out.curve.clone(),
            });
        }
        if fr[0] < fr[1] {
            wins += 1;
        } else if fr[0] > fr[1] {
            losses += 1;
        }
    }
    report.p_value = sign_test(wins, losses);
    Ok(report)
}

/// Policy trained on `source` applied greedily to `target`, next to a
/// policy trained on `target` with the same budget. Curves: `source`
/// (source policy on source), `transferred`, `target-trained`, `random`
/// (on target).
pub fn run_transfer(cfg: &EpisodeConfig, source: &Datasets, target: &Datasets, seed: u64) -> Result<Vec<CurveRecord>> {
    let src_policy = train_policy(cfg, source, seed)?.policy;
    let tgt_policy = train_policy(cfg, target, seed)?.policy;
    let mut out = Vec::new();
    for r in 0..cfg.repeats {
        let s = repeat_seed(seed, r);
        let runs = [
            ("source", source, Method::Hal, Some(&src_policy)),
            ("transferred", target, Method::Hal, Some(&src_policy)),
            ("target-trained", target, Method::Hal, Some(&tgt_policy)),
            ("random", target, Method::Random, None),
        ];
        for (name, data, m, p) in runs {
            out.push(CurveRecord {
                method: name.to_string(),
                seed: s,
                curve: run_method(cfg, data, m, p, s)?.curve,
            });
        }
    }
    Ok(out)
}
