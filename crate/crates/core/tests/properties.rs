//! Property tests for cross-module invariants.

use std::collections::BTreeSet;
use std::sync::Arc;

use hal::baselines::{entropy_query, kcenter_greedy, random_query};
use hal::classifier::{Classifier, TrainConfig};
use hal::data::{make_duplicated_pool, make_splits, synthetic_digits, ImageStore, PoolState, Provenance};
use hal::features::{bias_aware, diversity, ClassStats, Observation, Representation};
use hal::harness::{run_episode, Datasets, EpisodeConfig, ModelKind, Selector};
use hal::nn::{forward, softmax_rows, Batch, ModelSpec, Mode, Params, Shape};
use hal::policy::{
    pg_update, run_tournament, select_batch, Candidate, PgConfig, PolicyNet, ReplayBuffer, ScoreComparator,
    SelectMode, StepRecord, Trajectory, Transition,
};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn scored(scores: &[f64]) -> Vec<Candidate> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let o = Observation { uncertainty: s, diversity: vec![], prior: vec![], bias_aware: vec![] };
            (i, Arc::new(o))
        })
        .collect()
}

/// Applies Givens rotations in consecutive coordinate planes.
fn rotate(v: &[f64], angles: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for (k, &a) in angles.iter().enumerate() {
        let (i, j) = (k % v.len(), (k + 1) % v.len());
        if i == j {
            continue;
        }
        let (c, s) = (a.cos(), a.sin());
        let (x, y) = (out[i], out[j]);
        out[i] = c * x - s * y;
        out[j] = s * x + c * y;
    }
    out
}

fn tiny_store(n: usize, seed: u64) -> ImageStore {
    synthetic_digits(n, seed).unwrap()
}

fn tiny_classifier(store: &ImageStore, seed: u64) -> Classifier {
    let spec = ModelSpec::mlp(store.shape(), &[8], store.classes(), 0.3).unwrap();
    Classifier::new(spec, store.classes(), TrainConfig { seed, epochs: 2, ..TrainConfig::default() }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eval_forward_is_pure_and_softmax_normalized(
        inputs in 1usize..8, h in 1usize..8, classes in 2usize..6, rows in 1usize..5, s in any::<u64>(),
    ) {
        let spec = ModelSpec::mlp(Shape::flat(inputs), &[h], classes, 0.4).unwrap();
        let p = Params::init(&spec, s);
        let data: Vec<f64> = (0..rows * inputs).map(|i| ((i as f64 + s as f64 % 7.0) * 0.37).sin()).collect();
        let b = Batch::new(rows, data);
        let a = forward(&spec, &p, &b, Mode::Eval, 1).unwrap().output;
        let c = forward(&spec, &p, &b, Mode::Eval, 2).unwrap().output;
        prop_assert_eq!(&a, &c);
        for row in a.chunks(classes) {
            prop_assert!(row.iter().all(|&x| x >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let logits: Vec<f64> = (0..rows * classes).map(|i| (i as f64 * 91.0).sin() * 50.0).collect();
        for row in softmax_rows(&logits, classes).chunks(classes) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mc_dropout_without_dropout_equals_eval(inputs in 1usize..6, h in 1usize..6, s in any::<u64>()) {
        let spec = ModelSpec::mlp(Shape::flat(inputs), &[h], 3, 0.0).unwrap();
        let p = Params::init(&spec, s);
        let b = Batch::new(2, (0..2 * inputs).map(|i| i as f64 * 0.1 - 0.3).collect());
        let e = forward(&spec, &p, &b, Mode::Eval, 0).unwrap().output;
        let m = forward(&spec, &p, &b, Mode::McDropout, s).unwrap().output;
        prop_assert_eq!(e, m);
    }

    #[test]
    fn bias_aware_is_bounded_and_rotation_invariant(
        dim in 2usize..6,
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 6), 3..30),
        angles in prop::collection::vec(-3.2f64..3.2, 1..12),
    ) {
        let emb: Vec<Vec<f64>> = rows.iter().map(|r| r[..dim].to_vec()).collect();
        let labels: Vec<usize> = (0..emb.len()).map(|i| i % 2).collect();
        let st = ClassStats::from_embeddings(&emb, &labels, 2, dim, Representation::Mean).unwrap();
        let ba = bias_aware(&st);
        prop_assert!(ba.iter().all(|b| (0.0..=1.0).contains(b)));
        for c in st.classes.iter().filter(|c| !c.degenerate) {
            prop_assert!((c.spectrum.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let rot: Vec<Vec<f64>> = emb.iter().map(|e| rotate(e, &angles)).collect();
        let st_r = ClassStats::from_embeddings(&rot, &labels, 2, dim, Representation::Mean).unwrap();
        for (a, b) in ba.iter().zip(bias_aware(&st_r)) {
            prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
        }
    }

    #[test]
    fn diversity_is_invariant_under_dimension_permutation(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 4..20),
        e in prop::collection::vec(-3.0f64..3.0, 5),
        perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let labels: Vec<usize> = (0..rows.len()).map(|i| i % 2).collect();
        let st = ClassStats::from_embeddings(&rows, &labels, 2, 5, Representation::Mean).unwrap();
        let permute = |v: &[f64]| perm.iter().map(|&k| v[k]).collect::<Vec<_>>();
        let rows_p: Vec<Vec<f64>> = rows.iter().map(|r| permute(r)).collect();
        let st_p = ClassStats::from_embeddings(&rows_p, &labels, 2, 5, Representation::Mean).unwrap();
        let d = diversity(&e, &st).unwrap();
        let d_p = diversity(&permute(&e), &st_p).unwrap();
        for (a, b) in d.iter().zip(&d_p) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn tournament_finds_the_maximum(scores in prop::collection::vec(-1e3f64..1e3, 1..200), s in any::<u64>()) {
        let cands = scored(&scores);
        let cmp = ScoreComparator(|o: &Observation| o.uncertainty);
        let t = run_tournament(&cmp, &cands, s, SelectMode::Greedy).unwrap();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(scores[t.winner], best);
        prop_assert_eq!(t.comparisons, scores.len() - 1);
        let bound = (scores.len() as f64).log2().ceil() as usize;
        prop_assert!(t.transitions.len() <= bound);
        for (d, x) in t.transitions.iter().enumerate() {
            prop_assert!(x.depth >= d);
            prop_assert!(x.behavior_prob > 0.0 && x.behavior_prob <= 1.0);
        }
    }

    #[test]
    fn batch_selection_returns_distinct_top_scores(
        scores in prop::collection::vec(-1e3f64..1e3, 1..60), b in 1usize..10, s in any::<u64>(),
    ) {
        prop_assume!(b <= scores.len());
        let cands = scored(&scores);
        let cmp = ScoreComparator(|o: &Observation| o.uncertainty);
        let (picked, _) = select_batch(&cmp, &cands, b, s, SelectMode::Greedy).unwrap();
        let set: BTreeSet<usize> = picked.iter().copied().collect();
        prop_assert_eq!(set.len(), b);
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (k, &i) in picked.iter().enumerate() {
            prop_assert_eq!(scores[i], sorted[k]);
        }
    }

    #[test]
    fn kcenter_ignores_candidate_order(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 3..25),
        b in 1usize..4,
        perm_seed in any::<u64>(),
    ) {
        prop_assume!(b < pts.len());
        let centers = vec![pts[0].clone()];
        let cands: Vec<(usize, Vec<f64>)> = pts[1..].iter().cloned().enumerate().map(|(i, p)| (i + 10, p)).collect();
        let mut shuffled = cands.clone();
        let mut rng = hal::seed::rng(perm_seed);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        prop_assert_eq!(kcenter_greedy(&centers, &cands, b).indices, kcenter_greedy(&centers, &shuffled, b).indices);
    }

    #[test]
    fn duplicated_pool_balances_duplicate_classes(frac in 0.0f64..0.95, seed in any::<u64>()) {
        let store = tiny_store(60, 3);
        let a = make_duplicated_pool(&store, frac, 0.05, seed).unwrap();
        let b = make_duplicated_pool(&store, frac, 0.05, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let mut counts = vec![0usize; store.classes()];
        for i in (0..a.len()).filter(|&i| a.is_duplicate(i)) {
            counts[a.label(i)] += 1;
            if let Provenance::Duplicate { source } = a.provenance(i) {
                prop_assert_eq!(store.label(source), a.label(i));
            }
        }
        let present: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
        if let (Some(lo), Some(hi)) = (present.iter().min(), present.iter().max()) {
            prop_assert!(hi - lo <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_and_entropy_queries_pick_distinct_unlabeled(seed in any::<u64>(), b in 1usize..8) {
        let store = tiny_store(120, 1);
        let pool = make_splits(&store, 20, 30, seed).unwrap();
        let clf = tiny_classifier(&store, seed);
        let u: BTreeSet<usize> = pool.unlabeled().iter().copied().collect();
        for q in [random_query(&pool, b, seed).unwrap(), entropy_query(&pool, &store, &clf, b).unwrap()] {
            let set: BTreeSet<usize> = q.indices.iter().copied().collect();
            prop_assert_eq!(set.len(), b);
            prop_assert!(set.is_subset(&u));
        }
        let mut reversed = pool.unlabeled().to_vec();
        reversed.reverse();
        let pool_r = PoolState::new(pool.labeled().to_vec(), reversed, pool.validation().to_vec()).unwrap();
        prop_assert_eq!(
            entropy_query(&pool, &store, &clf, b).unwrap().indices,
            entropy_query(&pool_r, &store, &clf, b).unwrap().indices
        );
    }

    #[test]
    fn evaluate_ignores_index_order_and_scratch_training_ignores_label_order(seed in any::<u64>()) {
        let store = tiny_store(100, 2);
        let pool = make_splits(&store, 20, 30, seed).unwrap();
        let mut a = tiny_classifier(&store, 5);
        a.train(&pool, &store).unwrap();
        let mut labeled = pool.labeled().to_vec();
        labeled.reverse();
        let shuffled = PoolState::new(labeled, pool.unlabeled().to_vec(), pool.validation().to_vec()).unwrap();
        let mut b = tiny_classifier(&store, 5);
        b.train(&shuffled, &store).unwrap();
        prop_assert_eq!(a.params(), b.params());
        let mut val = pool.validation().to_vec();
        let acc = a.evaluate(&store, &val).unwrap();
        val.reverse();
        prop_assert_eq!(acc, a.evaluate(&store, &val).unwrap());
    }

    #[test]
    fn pool_is_conserved_through_an_episode(seed in any::<u64>()) {
        let cfg = EpisodeConfig {
            steps: 3, batch: 4, pool_size: 60, initial_labeled: 20, validation: 40,
            model: ModelKind::Mlp, mlp_hidden: 8, epochs: 2, finetune_epochs: 1, n_mc: 2,
            synthetic_size: 200, ..EpisodeConfig::default()
        };
        let data = Datasets::new(tiny_store(cfg.synthetic_size, 0)).unwrap();
        let out = run_episode(&cfg, &data, Selector::Baseline(hal::harness::Method::Random), seed).unwrap();
        prop_assert_eq!(out.pool.labeled().len() + out.pool.unlabeled().len(), cfg.initial_labeled + cfg.pool_size);
        prop_assert_eq!(out.pool.validation().len(), cfg.validation);
        prop_assert_eq!(out.curve.len(), cfg.steps + 1);
    }
}

#[test]
fn repeated_update_on_one_rewarded_transition_raises_its_probability() {
    let o = |v: f64| Arc::new(Observation { uncertainty: v, diversity: vec![v, 1.0 - v], prior: vec![], bias_aware: vec![0.3, 0.6] });
    let mut net = PolicyNet::new(5, &[6], 3).unwrap();
    let (l, r) = (o(0.2), o(0.7));
    let mut last = net.policy_prob(&l, &r).unwrap()[1];
    let cfg = PgConfig { gamma: 1.0, ..PgConfig::default() };
    for _ in 0..50 {
        let mut buf = ReplayBuffer::new(10);
        let t = Transition { left: l.clone(), right: r.clone(), action: 1, behavior_prob: last, depth: 0 };
        let traj = Trajectory { transitions: vec![t], winner: 1, comparisons: 1 };
        buf.push(StepRecord { episode: 0, step: 0, reward: 1.0, trajectories: vec![traj] }).unwrap();
        let mut twin = net.clone();
        pg_update(&mut net, &buf, &cfg).unwrap();
        pg_update(&mut twin, &buf, &cfg).unwrap();
        assert_eq!(net.params(), twin.params());
        let p = net.policy_prob(&l, &r).unwrap()[1];
        assert!(p > last || p > 1.0 - 1e-9, "{p} <= {last}");
        last = p;
    }
}

#[test]
fn untrained_policy_without_features_selects_uniformly() {
    let net = PolicyNet::new(Observation::len_for(2), &[8], 0).unwrap();
    let blank = Arc::new(Observation { uncertainty: 0.0, diversity: vec![0.0; 2], prior: vec![0.0; 144], bias_aware: vec![0.0; 2] });
    let cands: Vec<Candidate> = (0..8).map(|i| (i, Arc::clone(&blank))).collect();
    let mut counts = [0usize; 8];
    for s in 0..1000u64 {
        let (picked, _) = select_batch(&net, &cands, 1, s, SelectMode::Sample).unwrap();
        counts[picked[0]] += 1;
    }
    let expected = 1000.0 / 8.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "counts {counts:?}, chi2 {chi2}, p {p}");
}
