//! Seeded random streams.
//!
//! Every random choice in the simulator comes from a ChaCha8 generator seeded
//! with a 64-bit seed (via `SeedableRng::seed_from_u64`) and positioned on a
//! numbered stream. A trial `i` of an experiment uses stream `2i` for the
//! protocol run and stream `2i + 1` for drawing its inputs, so a run can be
//! replayed from `(seed, i)` whatever order the trials were scheduled in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator driving the protocol run of trial `index`.
pub fn session_rng(seed: u64, index: u64) -> SimRng {
    stream_rng(seed, index.wrapping_mul(2))
}

/// Generator used to draw the inputs (choices, message pairs) of trial `index`.
pub fn input_rng(seed: u64, index: u64) -> SimRng {
    stream_rng(seed, index.wrapping_mul(2).wrapping_add(1))
}
