//! Seeding helpers.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded through
//! [`rand::SeedableRng::seed_from_u64`]. Independent sub-streams (one per
//! Monte Carlo sample, per restart, ...) are derived by mixing the parent
//! seed with stream indices through SplitMix64, so the value drawn by
//! sample `k` never depends on how many other samples share its batch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a path of stream indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(seed: u64, path: &[u64]) -> Rng {
    rng_from_seed(derive_seed(seed, path))
}
