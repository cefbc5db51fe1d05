//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a master
//! seed and a path of counters. A child seed is `splitmix64(parent ^ mix(tag))`,
//! so the stream for run `r`, side `s` of a study seeded with `m` is
//! `derive(derive(m, r), s)` regardless of scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in output headers.
pub const GENERATOR_NAME: &str = "ChaCha8";

pub type SimRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for counter `tag` under `parent`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

pub fn stream(parent: u64, tag: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(parent, tag))
}
