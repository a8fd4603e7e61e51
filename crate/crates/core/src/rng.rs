//! Counter-based random streams.
//!
//! Every random draw in the crate comes from an [`RngStream`] addressed by a
//! global seed and a stream index. Streams are ChaCha8 keystreams: the seed
//! selects the key and the index selects the ChaCha stream, so distinct
//! indices never overlap and a given `(seed, index)` replays bit-identically.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        RngStream { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Position in the keystream, in 32-bit words.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Source of standard Gaussian increments for the integrators.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

impl NoiseSource for RngStream {
    #[inline]
    fn standard_normal(&mut self) -> f64 {
        self.normal()
    }
}

/// Noise stream that always returns zero: turns every SDE into its ODE.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    #[inline]
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

impl<N: NoiseSource + ?Sized> NoiseSource for &mut N {
    #[inline]
    fn standard_normal(&mut self) -> f64 {
        (**self).standard_normal()
    }
}
