//! Seeded random sources.
//!
//! All randomness in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded through `SeedableRng::seed_from_u64`. Uniform reals are built from
//! the top 53 bits of `next_u64`, scaled by 2^-53, giving `u ∈ [0, 1)`.
//!
//! Gaussian draws use the Box–Muller transform on a pair of uniforms
//! `(u1, u2)`:
//!
//! ```text
//! r  = sqrt(-2 ln(1 - u1))
//! z0 = r cos(2π u2)
//! z1 = r sin(2π u2)
//! ```
//!
//! Both `z0` and `z1` are emitted, in that order, before a new pair is drawn.
//! Independent streams for sub-tasks are keyed with [`derive_seed`].

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer applied to `seed ^ stream·φ`; used to key
/// independent streams (per layer, per split, per epoch) off one run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
pub fn unit_uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone)]
pub struct GaussianSource {
    seed: u64,
    mean: f64,
    stddev: f64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    /// Panics if `stddev` is negative or not finite.
    pub fn new(seed: u64, mean: f64, stddev: f64) -> Self {
        assert!(
            stddev.is_finite() && stddev >= 0.0 && mean.is_finite(),
            "GaussianSource needs finite mean and stddev >= 0 (got {mean}, {stddev})"
        );
        Self {
            seed,
            mean,
            stddev,
            rng: seeded_rng(seed),
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn stddev(&self) -> f64 {
        self.stddev
    }

    /// Changes mean and stddev without touching the underlying stream.
    pub fn reparameterize(&mut self, mean: f64, stddev: f64) {
        assert!(
            stddev.is_finite() && stddev >= 0.0 && mean.is_finite(),
            "GaussianSource needs finite mean and stddev >= 0 (got {mean}, {stddev})"
        );
        self.mean = mean;
        self.stddev = stddev;
    }

    /// Standard normal draw; the scaled draw is `mean + stddev * z`.
    pub fn standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = unit_uniform(&mut self.rng);
        let u2 = unit_uniform(&mut self.rng);
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn sample(&mut self) -> f64 {
        let z = self.standard();
        self.mean + self.stddev * z
    }
}
