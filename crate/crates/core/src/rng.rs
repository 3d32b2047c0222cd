//! Seeded randomness.
//!
//! Sequential draws use ChaCha8 so results are identical on every platform.
//! Per-edge negative sampling uses a stateless counter hash so a draw depends
//! only on `(seed, stream, counter)`, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-stream key; `counter_u64(seed, stream, c) == keyed_u64(stream_key(seed, stream), c)`.
#[inline]
pub fn stream_key(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

#[inline]
pub fn keyed_u64(key: u64, counter: u64) -> u64 {
    splitmix64(key ^ counter)
}

/// Uniform index in `0..n` from a precomputed stream key.
#[inline]
pub fn keyed_index(key: u64, counter: u64, n: usize) -> usize {
    ((keyed_u64(key, counter) as u128 * n as u128) >> 64) as usize
}

/// Stateless 64-bit draw for position `counter` of stream `stream`.
#[inline]
pub fn counter_u64(seed: u64, stream: u64, counter: u64) -> u64 {
    keyed_u64(stream_key(seed, stream), counter)
}

/// Uniform index in `0..n` for position `counter` of stream `stream`.
#[inline]
pub fn counter_index(seed: u64, stream: u64, counter: u64, n: usize) -> usize {
    // multiply-shift range reduction; bias is < n / 2^64
    keyed_index(stream_key(seed, stream), counter, n)
}
