//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream addressed by
//! `(seed, stream index)`, so shot `i` of a run depends only on the run seed
//! and `i`. Results are therefore identical however the shots are scheduled
//! across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// RNG for stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A child seed for a sub-computation, e.g. one loss evaluation of one arm.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}
