//! Seed derivation: one root seed fans out into named, indexed substreams so
//! every consumer of randomness (channels, RRA draws, exploration noise,
//! dataset splits) is reproducible and independent.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stable 64-bit FNV-1a, independent of `std` hasher randomization.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Derives the seed of substream `name[index]` from the root seed.
pub fn substream_seed(root: u64, name: &str, index: u64) -> u64 {
    let mut bytes = Vec::with_capacity(name.len() + 16);
    bytes.extend_from_slice(&root.to_le_bytes());
    bytes.extend_from_slice(name.as_bytes());
    bytes.extend_from_slice(&index.to_le_bytes());
    fnv1a(&bytes)
}

/// A fresh generator for substream `name[index]`.
pub fn substream(root: u64, name: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(substream_seed(root, name, index))
}
