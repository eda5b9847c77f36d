//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`Rng`], a ChaCha8 stream
//! generator. Sub-streams are derived by mixing a parent seed with a stream id,
//! so results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The project-wide generator.
pub type Rng = ChaCha8Rng;

/// Name recorded in experiment configs and manifests.
pub const PRNG_NAME: &str = "chacha8";

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for `stream` under `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix64(mix64(seed) ^ stream.rotate_left(17) ^ 0x5851_F42D_4C95_7F2D)
}

/// Derive a seed from a list of stream ids.
pub fn derive_all(seed: u64, streams: &[u64]) -> u64 {
    streams.iter().fold(seed, |s, &x| derive(s, x))
}

/// FNV-1a over bytes; stable across platforms and toolchains.
pub fn str_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}
