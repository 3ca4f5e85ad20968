//! Splittable seed streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed that is derived from a base seed and a path of tags
//! (step, query, rollout, ...). Parallel workers therefore draw disjoint,
//! reproducible streams regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `base` and an ordered tag path.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags. Distinct constants keep streams for different purposes apart.
pub mod tag {
    pub const TABLE: u64 = 0x7461_626c;
    pub const QUERY: u64 = 0x7175_6572;
    pub const BIAS: u64 = 0x6269_6173;
    pub const EPISODE: u64 = 0x6570_6973;
    pub const ROLLOUT: u64 = 0x726f_6c6c;
    pub const PERTURB: u64 = 0x7065_7274;
    pub const INIT: u64 = 0x696e_6974;
    pub const CORPUS: u64 = 0x636f_7270;
}
