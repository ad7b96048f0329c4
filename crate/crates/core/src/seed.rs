//! Deterministic random streams.
//!
//! Every stochastic operation takes an explicit stream. Sub-streams for
//! independent consumers (instance sampling, speaker actions, listener
//! actions, ...) are derived by hashing a base seed with a path of labels,
//! so results never depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream used throughout the crate.
pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `base` to produce a derived seed.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

pub fn substream(base: u64, parts: &[u64]) -> Stream {
    stream(derive(base, parts))
}
