//! Deterministic seed splitting.
//!
//! `expand_seeds(master, n)[i] = splitmix64(master + (i + 1) * 0x9E3779B97F4A7C15)`.
//! The counter map is injective modulo 2^64 (odd increment) and the
//! splitmix64 finaliser is a bijection, so the seeds for one master are
//! pairwise distinct. The rule is fixed; changing it changes every result.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `index`-th child seed of `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    mix(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// The first `count` child seeds of `master`.
pub fn expand_seeds(master: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| child_seed(master, i)).collect()
}

/// The RNG used for every stream in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
