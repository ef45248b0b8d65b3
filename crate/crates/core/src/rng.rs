//! Per-task seeded random streams.
//!
//! Every worker derives its own ChaCha stream from the run seed plus a
//! purpose tag and task coordinates, so results never depend on thread
//! scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod purpose {
    pub const PROBLEMS: u64 = 0x5052_4f42;
    pub const PRETRAIN_MIX: u64 = 0x4d49_5845;
    pub const SEARCH: u64 = 0x5345_4152;
    pub const GSOS: u64 = 0x4753_4f53;
    pub const NODE_SELECT: u64 = 0x4e4f_4445;
    pub const EVAL: u64 = 0x4556_414c;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with any number of tags into a new 64-bit seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}
