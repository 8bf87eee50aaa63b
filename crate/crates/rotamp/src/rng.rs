//! Seed derivation for reproducible, schedule-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Fixed sub-stream labels used when building an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    RotationL = 1,
    RotationR = 2,
    Signal = 3,
    Init = 4,
    Spectrum = 5,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replicate `index` under a master seed.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Generator for one labelled sub-stream of `seed`.
pub fn stream(seed: u64, label: Stream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(label as u64);
    rng
}
