//! Stable hashing used to derive per-slot seeds.
//!
//! `core::hash::Hasher` implementations in std are not guaranteed stable across
//! releases, so every seed that ends up in an output file goes through FNV-1a
//! over explicit little-endian bytes.

use core::hash::Hasher;

use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Incremental stable hasher over byte-level parts.
#[derive(Default)]
pub struct StableHash(FnvHasher);

impl StableHash {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.0.write(&v.to_le_bytes());
        self
    }

    /// Strings are length-prefixed so ("ab","c") and ("a","bc") differ.
    pub fn str(mut self, s: &str) -> Self {
        self.0.write(&(s.len() as u64).to_le_bytes());
        self.0.write(s.as_bytes());
        self
    }

    pub fn finish(&self) -> u64 {
        mix(self.0.finish())
    }
}

// splitmix64 finalizer; FNV alone has weak low bits for bucket selection.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one plan slot: hash(run seed, image id, slot).
pub fn slot_seed(run_seed: u64, image_id: &str, slot: usize) -> u64 {
    StableHash::new()
        .u64(run_seed)
        .str(image_id)
        .u64(slot as u64)
        .finish()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
