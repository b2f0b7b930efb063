//! Seed derivation. Every random stream in the crate is a ChaCha generator
//! seeded from a base seed mixed with a stream tag and indices, so results
//! are a pure function of the top-level seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base`, a stream tag and an index.
pub fn derive(base: u64, tag: &str, index: u64) -> u64 {
    let mut h = mix(base);
    for b in tag.bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ mix(index))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(base: u64, tag: &str, index: u64) -> Rng {
    rng(derive(base, tag, index))
}
