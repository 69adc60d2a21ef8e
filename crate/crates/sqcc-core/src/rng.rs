//! Deterministic randomness plumbing.
//!
//! Every stochastic component in this crate draws from a stream-splittable
//! generator keyed by a master seed and a stream id. A given (seed, stream,
//! draw index) triple produces the same value on every run and under every
//! thread schedule, which is what makes the Monte Carlo campaigns reproduce
//! byte for byte regardless of worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Factory for independent, reproducible random streams sharing one master
/// seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeed {
    master: u64,
}

impl StreamSeed {
    pub fn new(master: u64) -> Self {
        StreamSeed { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Generator for the given stream. Streams with distinct ids never
    /// overlap; the same id always yields the same sequence.
    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(id);
        rng
    }
}

/// Derives a child seed from a master seed and an index, for components that
/// need their own stream space. SplitMix64 finalizer, so nearby indices give
/// unrelated seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(index.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Draws one Gaussian sample with the given mean and variance.
pub fn gaussian_sample<T: Real, R: Rng + ?Sized>(mean: T, variance: T, rng: &mut R) -> Result<T> {
    if !variance.is_finite() || variance < T::zero() {
        return Err(Error::Domain {
            op: "gaussian_sample",
            detail: format!("variance {variance} must be finite and >= 0"),
        });
    }
    Ok(mean + variance.sqrt() * T::standard_normal(rng))
}
