//! Per-trial seeds. Trial `t` of sweep point `k` draws from
//! `ChaCha8Rng::seed_from_u64(splitmix64(master ^ ((k << 32) | t)))`, so a
//! trial's randomness depends only on its coordinates, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, k: u32, trial: u32) -> u64 {
    splitmix64(master ^ ((u64::from(k) << 32) | u64::from(trial)))
}

pub fn trial_rng(master: u64, k: u32, trial: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, k, trial))
}
