//! Image storage, IDX ingestion, pool splits and synthetic pools.

mod digits;
mod idx;
mod pool;
mod store;
mod synth;

pub use digits::synthetic_digits;
pub use idx::{load_idx, load_idx_dir, write_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use pool::{make_splits, make_splits_sized, stratified_sample, PoolState, SplitPlan};
pub use store::{ImageStore, Provenance};
pub use synth::{blend_pixel, color_field, make_domain_shift, make_duplicated_pool, shift_with_field};
