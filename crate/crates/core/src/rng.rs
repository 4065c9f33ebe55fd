//! Seed derivation. Every random choice derives from a master seed through
//! independent ChaCha streams, so results do not depend on scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for replica/instance `stream` of `master`.
pub fn child_rng(master: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// A 64-bit seed for child `stream` of `master`.
pub fn child_seed(master: u64, stream: u64) -> u64 {
    child_rng(master, stream).next_u64()
}
