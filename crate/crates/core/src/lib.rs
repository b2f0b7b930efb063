//! Heapified active learning.
//!
//! A pool-based active-learning engine whose query policy is a learned
//! pairwise comparator run as a single-elimination tournament over the
//! unlabeled pool. Observations combine MC-dropout uncertainty, class-wise
//! diversity, a HOG image prior, and a bias-aware spectrum feature. The policy
//! is trained with an importance-corrected policy gradient on the marginal
//! validation-accuracy reward.
//!
//! Module map:
//!
//! - [`nn`]: tiny f64 network kernel (dense/conv/pool/dropout) with exact
//!   reverse-mode gradients and Adam.
//! - [`data`]: IDX ingestion, splits, synthetic digits, duplicated and
//!   domain-shifted pools.
//! - [`classifier`]: the prediction model, training, evaluation, MC dropout.
//! - [`features`]: class statistics, bias-aware feature, mutual information,
//!   diversity, HOG prior, observation assembly.
//! - [`policy`]: comparator network, tournaments, replay buffer, policy
//!   gradient.
//! - [`baselines`]: random, entropy, DBAL and k-center queries.
//! - [`harness`]: episodes, policy training, ALC metric, experiments, CSV.

pub mod baselines;
pub mod checkpoint;
pub mod classifier;
pub mod data;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod policy;
pub mod seed;

pub use error::{HalError, Result};
