//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value. Sub-streams are derived from a parent seed and a key with
//! SplitMix64 finalization:
//!
//! ```text
//! derive(seed, key) = mix64(seed ^ mix64(key + 0x9E3779B97F4A7C15))
//! named(seed, name) = derive(seed, fnv1a64(name))
//! ```
//!
//! so results never depend on thread scheduling, only on the seed tree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used to synthesize test cubes.
pub const STREAM_CUBE_GEN: &str = "cube-gen";
/// Stream driving the genetic search (init, pairing, crossover, mutation).
pub const STREAM_GA: &str = "ga";
/// Stream used for free control-bit fill during encoding.
pub const STREAM_ENCODE_FILL: &str = "encode-fill";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, key: u64) -> u64 {
    mix64(seed ^ mix64(key.wrapping_add(GOLDEN)))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn named(seed: u64, name: &str) -> u64 {
    derive(seed, fnv1a64(name.as_bytes()))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
