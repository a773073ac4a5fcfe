//! Seeded random streams.
//!
//! Every randomized step draws from a ChaCha8 stream keyed by
//! `(seed, tag, index)`. The 32-byte ChaCha key is the little-endian
//! concatenation of the seed, an FNV-1a hash of the tag, the index and a
//! fixed version word, so a stream depends only on those three values and
//! never on thread scheduling or call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const STREAM_VERSION: u64 = 1;

/// FNV-1a over the tag bytes.
fn tag_hash(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic stream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag_hash(tag).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..32].copy_from_slice(&STREAM_VERSION.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, for handing a sub-experiment its own seed space.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, tag, index).next_u64()
}
