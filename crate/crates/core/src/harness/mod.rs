//! Episode orchestration, policy training, ALC metrics, the experiment
//! drivers behind the CLI, and their CSV output.

mod config;
mod datasets;
mod episode;
mod experiments;
mod metrics;
pub mod output;

pub use config::{EpisodeConfig, ModelKind, Profile};
pub use datasets::{load_store, Datasets};
pub use episode::{
    build_classifier, full_pool_accuracy, new_policy, run_episode, train_policy, EpisodeOutcome, Method,
    PolicyTraining, Selector, StepOutcome,
};
pub use experiments::{
    evaluate_methods, mean_by_variant, repeat_seed, run_ablation_bias_aware, run_ablation_representation,
    run_duplicated, run_transfer, AlcRecord, BiasAwareAblation, CurveRecord, DuplicateRecord, DuplicatedReport,
};
pub use metrics::{alc, alc_norm, mean, sign_test, LearningCurve};
