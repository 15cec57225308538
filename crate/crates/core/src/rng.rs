//! Counter-based randomness keyed by `(seed, purpose, indices)`.
//!
//! Every random decision in the crate derives from a key rather than from a
//! shared stream, so results do not depend on iteration order or on how work
//! is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep independent uses of one seed from colliding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    SbmEdge = 1,
    SampleLabels = 2,
    FlipLabels = 3,
    Moons = 4,
    PowerStart = 5,
    Experiment = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed, a purpose tag and any number of indices into one 64-bit key.
pub fn key(seed: u64, purpose: Purpose, indices: &[u64]) -> u64 {
    let mut h = splitmix64(seed ^ splitmix64(purpose as u64));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0xD1B5_4A32_D192_ED03)));
    }
    h
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
pub fn uniform(seed: u64, purpose: Purpose, indices: &[u64]) -> f64 {
    (key(seed, purpose, indices) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A stream generator for tasks that need many draws (sampling, noise).
pub fn stream(seed: u64, purpose: Purpose, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(key(seed, purpose, indices))
}
