//! Seeded random source used for every sampling decision in the toolkit.
//!
//! All randomness goes through [`SeededRng`], which is ChaCha8 seeded from a
//! 64-bit integer via `SeedableRng::seed_from_u64` (PCG32 key expansion).
//! ChaCha8 output is defined by its algorithm rather than by the platform,
//! so splits, shuffles and search trials reproduce across machines.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default seed for splits, shuffles and searches.
pub const DEFAULT_SEED: u64 = 42;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a sub-task (class index, fold, trial).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined value
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns `0..n` in a seeded random order.
pub fn permutation(n: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
