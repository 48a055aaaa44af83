//! Deterministic random streams.
//!
//! Every Monte-Carlo work unit draws from its own generator whose seed is a hash of the master
//! seed and the unit's coordinates (SNR index, velocity index, block index, drop index, ...).
//! Results therefore do not depend on execution order or on the number of workers.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_xoshiro::SplitMix64;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of coordinates into a master seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(master ^ GOLDEN), |acc, &p| mix64(acc.wrapping_add(GOLDEN).wrapping_add(mix64(p))))
}

/// Cryptographic-quality stream for a work unit.
pub fn stream(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, parts))
}

/// Cheap generator for keyed one-off draws (per-link shadowing, per-receiver coin flips).
pub fn keyed(master: u64, parts: &[u64]) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive_seed(master, parts))
}
