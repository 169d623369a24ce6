//! Deterministic seed derivation and generator construction.

use rand::SeedableRng;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// The generator used throughout the crate.
pub type Rng = Xoshiro256PlusPlus;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Pure function of `base` and every element of `parts`, order-sensitive.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| extend(acc, p))
}

/// `derive(base, [a, b, c])` equals `extend(derive(base, [a, b]), c)`.
#[inline]
pub fn extend(derived: u64, part: u64) -> u64 {
    splitmix64(derived ^ splitmix64(part))
}

/// Hashes a stream label so it can be mixed into [`derive`].
pub fn label(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn rng(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn substream(base: u64, parts: &[u64]) -> Rng {
    rng(derive(base, parts))
}

/// Short-lived keyed stream for a handful of draws; seeding is a single store.
pub fn fork(base: u64, parts: &[u64]) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive(base, parts))
}
