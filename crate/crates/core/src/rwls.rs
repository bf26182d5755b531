//! Recursive weighted least squares with exponential forgetting.
//!
//! The model is the affine voltage law at the settled injection angle:
//! `z = theta[0] + theta[1] * ij`, i.e. regressor `h = [1, ij]` against the
//! measured magnitude, so `theta = [vth, zth]`. The recursion is the
//! covariance form: a rank-one information update scaled by the sample
//! weight, followed by division of the covariance by the forgetting factor.
//! With `forgetting = 1` and constant weight it reproduces batch weighted
//! least squares around the prior; with `forgetting < 1` the information of
//! old samples decays geometrically, which is what lets the fit track
//! parameter steps.

use nalgebra::{Matrix2, Vector2};

use crate::error::Error;

/// Tunables for the least-squares recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwlsConfig {
    /// Prior parameter estimate `[vth, zth]`.
    pub theta0: Vector2<f64>,
    /// Prior covariance scale: the initial covariance is `p0 * I`. Large
    /// values mean an uninformative prior.
    pub p0: f64,
    /// Forgetting factor in `(0, 1]`; 1 keeps all history.
    pub forgetting: f64,
    /// Relative weight of each sample, > 0.
    pub weight: f64,
}

impl Default for RwlsConfig {
    fn default() -> Self {
        Self {
            theta0: Vector2::zeros(),
            p0: 1e6,
            forgetting: 0.995,
            weight: 1.0,
        }
    }
}

impl RwlsConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(Error::config(
                "rwls.forgetting",
                format!(
                    "forgetting factor must lie in (0, 1] (got {})",
                    self.forgetting
                ),
            ));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::config(
                "rwls.weight",
                format!(
                    "sample weight must be positive and finite (got {})",
                    self.weight
                ),
            ));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::config(
                "rwls.p0",
                format!(
                    "prior covariance scale must be positive and finite (got {})",
                    self.p0
                ),
            ));
        }
        if !(self.theta0[0].is_finite() && self.theta0[1].is_finite()) {
            return Err(Error::config(
                "rwls.theta0",
                "prior estimate must be finite".to_string(),
            ));
        }
        Ok(())
    }
}

/// Estimate and covariance after `k` absorbed samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsqState {
    /// Parameter estimate `[vth, zth]`.
    pub theta: Vector2<f64>,
    /// Parameter covariance; symmetric positive definite.
    pub cov: Matrix2<f64>,
    /// Number of updates absorbed.
    pub k: u64,
}

impl LsqState {
    pub fn new(cfg: &RwlsConfig) -> Self {
        Self {
            theta: cfg.theta0,
            cov: Matrix2::identity() * cfg.p0,
            k: 0,
        }
    }

    /// Absorb one weighted sample `(h, z)` and return the next state.
    ///
    /// The gain denominator `forgetting / weight + h' P h` is positive for
    /// any valid covariance; it is still checked so a corrupted state fails
    /// loudly rather than silently flipping the update sign.
    pub fn update(self, cfg: &RwlsConfig, h: Vector2<f64>, z: f64) -> Result<LsqState, Error> {
        let ph = self.cov * h;
        let denom = cfg.forgetting / cfg.weight + h.dot(&ph);
        if denom <= 0.0 || denom.is_nan() {
            return Err(Error::NumericalBreakdown {
                context: "rwls gain denominator",
                reason: format!("forgetting/weight + h'Ph = {denom} must be positive"),
            });
        }
        let gain = ph / denom;
        let residual = z - h.dot(&self.theta);
        let theta = self.theta + gain * residual;
        let cov = (self.cov - gain * ph.transpose()) / cfg.forgetting;
        let cov = (cov + cov.transpose()) * 0.5; // keep exact symmetry
        Ok(LsqState {
            theta,
            cov,
            k: self.k + 1,
        })
    }

    /// Model prediction `h' theta` for a regressor.
    pub fn predict(&self, h: Vector2<f64>) -> f64 {
        h.dot(&self.theta)
    }
}
