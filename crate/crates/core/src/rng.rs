//! Seed plumbing. Every random quantity in the crate is drawn from a ChaCha8
//! stream addressed by `(seed, stream)`, so trial `i` of an experiment is the
//! same no matter which thread runs it or in which order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Counter-addressed generator: stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a master seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // Stream 0 is reserved for direct use of the master seed.
    stream_rng(seed, tag.wrapping_add(1)).next_u64()
}

/// Folds several tags into one derived seed.
pub fn derive_seed_path(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(seed, |s, &t| derive_seed(s, t))
}
