//! Per-path random streams.
//!
//! Every path owns its generators, seeded from `(base_seed, path_index,
//! stream)` through a SplitMix64 finalizer, so any subset of paths can be
//! replayed independently of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for the rating chain.
pub const RATING_STREAM: u64 = 0;
/// Stream tag for the short rate.
pub const RATE_STREAM: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one path and stream.
pub fn path_seed(base_seed: u64, path_index: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ path_index) ^ stream)
}

pub fn path_rng(base_seed: u64, path_index: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(path_seed(base_seed, path_index, stream))
}
