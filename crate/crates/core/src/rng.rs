//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed. Parallel work derives
//! independent streams from one master seed: stream `i` is the ChaCha8
//! generator seeded with the master seed and switched to stream number `i`.
//! ChaCha streams never overlap, so no two replications share random numbers
//! regardless of how many draws each one makes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for a single-stream computation.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` derived from `master_seed`.
pub fn stream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
