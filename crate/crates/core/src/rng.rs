//! Seed derivation and the seeded generator used throughout.
//!
//! Every random stream in the pipeline comes from a master seed mixed with a
//! fixed tag sequence, so sub-streams are independent of evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `master` with `tags`; each tag passes through the finalizer so
/// permuted tag lists give unrelated seeds.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t).rotate_left(17)))
}

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags for [`derive_seed`].
pub mod tag {
    pub const SPLIT: u64 = 1;
    pub const RFFD: u64 = 2;
    pub const KSVD: u64 = 3;
    pub const CV: u64 = 4;
    pub const SVM: u64 = 5;
}
