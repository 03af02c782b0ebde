//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit master seed and
//! positioned on one of its 2^64 independent streams. A Monte Carlo
//! replication (or a chunk of samples) owns the stream whose index equals its
//! own index, so results never depend on how work is scheduled across
//! threads. ChaCha output and the `[0, 1)` float conversion are
//! platform-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Rewinds to the first draw of the stream.
    pub fn reset(&mut self) {
        *self = Self::new(self.master_seed, self.stream_index);
    }

    /// One uniform draw in `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`, consuming exactly one draw.
    pub fn pick(&mut self, n: usize) -> usize {
        assert!(n > 0, "pick from an empty set");
        pick_index(self.next_unit(), n)
    }
}

/// Maps a unit draw onto `0..n`.
pub fn pick_index(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}
