//! Seed streams.
//!
//! Every source of randomness in the workspace is a named stream derived
//! from one root seed, so adding an output option or reordering independent
//! work never perturbs the draws of another component.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Derive the sub-seed for a named stream.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let tag = fnv1a(label.as_bytes());
    splitmix64(splitmix64(root ^ tag).wrapping_add(index))
}

/// RNG for a named stream of the root seed.
pub fn stream_rng(root: u64, label: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(root, label, index))
}
