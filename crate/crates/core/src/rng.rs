//! Seeded random streams.
//!
//! Every stochastic operation takes its randomness from a ChaCha8 stream so
//! that results depend only on seeds, never on scheduling. Independent
//! sub-streams (one per trajectory, trial, or purpose) are addressed by the
//! ChaCha stream id rather than by reseeding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PodRng = ChaCha8Rng;

/// Stream id used for weight initialization.
pub const STREAM_INIT: u64 = 0;
/// Stream id used for per-epoch shuffling.
pub const STREAM_SHUFFLE: u64 = 1;

pub fn seeded(seed: u64) -> PodRng {
    PodRng::seed_from_u64(seed)
}

/// The `index`-th independent stream under `master_seed`.
pub fn derived(master_seed: u64, index: u64) -> PodRng {
    let mut rng = PodRng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
