//! Measurement noise on the voltage-magnitude channel.
//!
//! Gaussian, i.i.d., additive, and fully reproducible: the generator is
//! ChaCha8 with an explicit 64-bit seed and the Gaussian draws come from the
//! ziggurat sampler, so a `(sigma, seed)` pair pins the entire noise
//! sequence. Every call consumes exactly one draw — including at
//! `sigma = 0` — which keeps the stream position independent of the noise
//! level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Error;

/// Additive Gaussian noise source for measured voltage magnitudes.
#[derive(Debug, Clone)]
pub struct NoiseChannel {
    sigma: f64,
    dist: Normal<f64>,
    rng: ChaCha8Rng,
}

impl NoiseChannel {
    /// `sigma` is the noise standard deviation in volts, `sigma >= 0`.
    pub fn new(sigma: f64, seed: u64) -> Result<Self, Error> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::config(
                "noise.sigma",
                format!("standard deviation must be finite and >= 0 (got {sigma})"),
            ));
        }
        let dist = Normal::new(0.0, sigma).map_err(|e| {
            Error::config("noise.sigma", format!("invalid noise distribution: {e}"))
        })?;
        Ok(Self {
            sigma,
            dist,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One measurement: the true magnitude plus one Gaussian draw. With
    /// `sigma = 0` this returns `true_v` exactly.
    pub fn measure(&mut self, true_v: f64) -> f64 {
        true_v + self.dist.sample(&mut self.rng)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}
