use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded random source for the variation phase.
///
/// Every draw is one call on the underlying ChaCha8 stream, so the sequence is
/// fixed by the seed and by the documented order in which operators draw:
/// tournaments, then per offspring pair the crossover cut, then per child the
/// extension draws (runs in `(channel, start)` order, left boundary before
/// right), compression draws (first cell before last) and pruning draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// One Bernoulli(p) draw; always consumes exactly one uniform.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }
}
