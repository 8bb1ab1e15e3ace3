//! Counter-based random streams.
//!
//! Every sample in a Monte Carlo run draws from its own ChaCha8 stream keyed
//! by `(seed, sample index)`. Streams are mutually independent, cheap to
//! construct, and independent of scheduling, so a run is reproducible for a
//! given seed no matter how samples are distributed over workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG handed to a single sample.
pub type SampleRng = ChaCha8Rng;

/// Stream for sample `index` of the run keyed by `seed`.
pub fn sample_stream(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A buffered supply of uniform 2-bit draws, used for lattice step directions.
/// One u64 refill yields 32 directions; drawing stays bias-free because four
/// directions divide every power of two.
pub struct DirectionBuffer {
    bits: u64,
    remaining: u8,
}

impl DirectionBuffer {
    pub fn new() -> Self {
        Self { bits: 0, remaining: 0 }
    }

    #[inline]
    pub fn next(&mut self, rng: &mut SampleRng) -> u8 {
        if self.remaining == 0 {
            self.bits = rand::RngCore::next_u64(rng);
            self.remaining = 32;
        }
        let d = (self.bits & 0b11) as u8;
        self.bits >>= 2;
        self.remaining -= 1;
        d
    }
}

impl Default for DirectionBuffer {
    fn default() -> Self {
        Self::new()
    }
}
