//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! the run seed, so changing e.g. the noise realization never perturbs the
//! channel draw of the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel = 1,
    Clutter = 2,
    Noise = 3,
    Physio = 4,
    Jitter = 5,
    Probe = 6,
}

/// Stream for `(seed, purpose)`.
pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    indexed_stream(seed, purpose, 0)
}

/// Stream for `(seed, purpose, index)`, e.g. one noise stream per loop window.
pub fn indexed_stream(seed: u64, purpose: Stream, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | u64::from(index));
    rng
}

/// Circularly-symmetric complex Gaussian sample with the given total variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(sd * re, sd * im)
}
