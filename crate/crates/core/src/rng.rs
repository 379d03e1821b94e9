//! Deterministic random-stream derivation.
//!
//! Every random draw in the toolkit comes from a generator derived from
//! `(experiment seed, purpose tag, index)`. Streams are independent of
//! execution order, so trials and restarts can run concurrently without
//! sharing generator state and still reproduce bit-identically.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Generator for the stream named by `(seed, tag, index)`.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha12Rng {
    let th = fnv1a64(tag.as_bytes());
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&th.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..].copy_from_slice(&splitmix64(seed ^ th.rotate_left(17) ^ index).to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

/// Derived sub-seed, for handing a whole seeded subsystem to a child task.
pub fn subseed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(seed ^ fnv1a64(tag.as_bytes()).rotate_left(23) ^ splitmix64(index))
}
