//! Labelled random streams derived from a master seed.
//!
//! Every consumer of randomness in a training run (environment resets,
//! exploration, replay sampling, target smoothing, evaluation) gets its own
//! ChaCha stream. Streams share the master seed and differ only in the
//! ChaCha stream id, so draws on one never shift another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Init = 1,
    Environment = 2,
    Exploration = 3,
    ReplaySampling = 4,
    TargetSmoothing = 5,
    Evaluation = 6,
    Diagnostics = 7,
}

pub fn stream(master_seed: u64, label: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(label as u64);
    rng
}

/// Stream used by Monte Carlo worker `index`; independent of how work is
/// split across threads.
pub fn indexed(master_seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(1 << 32 | index);
    rng
}
