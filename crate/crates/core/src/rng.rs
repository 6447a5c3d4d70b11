//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every stochastic step (one replicate's schedule draw, its noise path, a
//! window end point, a train/test shuffle) gets its own ChaCha8 stream keyed
//! by a parent seed and an integer key. Work can therefore be split across
//! threads in any order and still reproduce the serial result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, key)`.
pub fn child_seed(seed: u64, key: u64) -> u64 {
    mix64(seed ^ mix64(key.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Derives a child seed from a seed and a textual label, e.g. `"split"`.
pub fn labeled_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the parent.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    child_seed(seed, h)
}

/// A generator for stream `key` under `seed`.
pub fn stream(seed: u64, key: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}

/// A generator seeded directly from `seed` (stream 0).
pub fn from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
