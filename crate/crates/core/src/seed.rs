//! Seed derivation.
//!
//! Every stochastic step draws from its own stream, keyed by a master seed
//! plus the indices that identify the task. Results therefore do not depend
//! on scheduling or on how work is chunked.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a sequence of task indices.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix(seed), |acc, &p| mix(acc ^ mix(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

/// Derives a child seed from a stage name (FNV-1a over its bytes).
pub fn derive_tag(seed: u64, tag: &str) -> u64 {
    let h = tag.bytes().fold(0xCBF2_9CE4_8422_2325_u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    });
    derive(seed, &[h])
}

/// Counter-based uniform draw in `[0, 1)` for item `index` of stream `seed`.
#[inline]
pub fn unit(seed: u64, index: u64) -> f64 {
    (mix(mix(seed) ^ index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
