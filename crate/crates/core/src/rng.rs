//! Reproducible random numbers for perturbations.
//!
//! The generator is SplitMix64 (Steele, Lea and Flood): the state advances by
//! the odd constant `0x9e3779b97f4a7c15` and each output is the state passed
//! through the mixer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! z =  z ^ (z >> 31)
//! ```
//!
//! Uniform doubles keep the top 53 bits: `(next_u64() >> 11) * 2^-53`, which
//! lies in `[0, 1)`. Both steps are fully specified, so any implementation can
//! reproduce a perturbation from its seed.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub struct Uniform {
    inner: SplitMix64,
}

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }
}
