//! Per-candidate observation: uncertainty, diversity, HOG prior and the
//! bias-aware spectrum feature, plus the labeled-set class statistics
//! they share.

mod hog;
mod observation;
mod stats;

pub use hog::{hog_prior, hog_priors, HOG_BINS, HOG_CELLS, HOG_LEN};
pub use observation::{observe, observe_pool, FeatureToggles, Observation};
pub use stats::{bias_aware, diversity, entropy, mutual_information, ClassStats, ClassSummary, Representation};
