//! Deterministic derivation of independent random streams.
//!
//! A run has one 64-bit master seed. The stream for a unit of work is seeded
//! with `stream_seed(master, tag, L, index)`, where each component is folded
//! in with a SplitMix64 finalizer and the tag is hashed with 64-bit FNV-1a.
//! Streams are [`ChaCha8Rng`] generators seeded through `seed_from_u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator identifier recorded in reports.
pub const GENERATOR: &str =
    "ChaCha8Rng (rand_chacha 0.9) via seed_from_u64; seed = splitmix64 fold of (seed, fnv1a64(tag), L, index)";

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3))
}

pub fn stream_seed(seed: u64, tag: &str, l: u64, index: u64) -> u64 {
    let mut h = splitmix64(seed ^ fnv1a64(tag.as_bytes()));
    h = splitmix64(h ^ l);
    splitmix64(h ^ index)
}

pub fn stream(seed: u64, tag: &str, l: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, tag, l, index))
}
