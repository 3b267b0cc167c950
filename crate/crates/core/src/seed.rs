//! Seed derivation.
//!
//! Every random stream in a run is derived from one root seed with a
//! counter-based mix, so a stream depends only on `(root, stream, index)`
//! and never on the order in which episodes are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Named streams, kept distinct so that e.g. the policy stream of episode 3
/// never collides with the generator stream of episode 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Episode = 1,
    Policy = 2,
    Dataset = 3,
    Training = 4,
    Init = 5,
    GradientCheck = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of `index`-th member of `stream` under `root`.
pub fn derive_seed(root: u64, stream: Stream, index: u64) -> u64 {
    let a = splitmix64(root ^ splitmix64(stream as u64));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(root: u64, stream: Stream, index: u64) -> SimRng {
    rng_from_seed(derive_seed(root, stream, index))
}
