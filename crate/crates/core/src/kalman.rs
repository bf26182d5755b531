//! Linear Kalman filter over the affine voltage law.
//!
//! State `x = [vth, zth]` with scalar measurements `z = h' x + v`,
//! `h = [1, ij]`. Predict propagates through the state transition and
//! inflates the covariance with the process noise; update applies the
//! standard innovation form. With an identity transition, zero process
//! noise, and weight `1/r`, the filter is algebraically identical to the
//! unit-forgetting least-squares recursion — a property the tests pin down
//! numerically.

use nalgebra::{Matrix2, Vector2};

use crate::error::Error;

/// Filter tunables and priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    /// State transition applied in the predict step.
    pub f: Matrix2<f64>,
    /// Process-noise covariance added each predict; symmetric PSD.
    pub q: Matrix2<f64>,
    /// Measurement-noise variance (V^2), > 0.
    pub r: f64,
    /// Prior state estimate `[vth, zth]`.
    pub x0: Vector2<f64>,
    /// Prior covariance; symmetric positive definite.
    pub p0: Matrix2<f64>,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            f: Matrix2::identity(),
            q: Matrix2::new(1e-4, 0.0, 0.0, 1e-6),
            r: 0.25,
            x0: Vector2::zeros(),
            p0: Matrix2::identity() * 1e6,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::config(
                "kalman.r",
                format!(
                    "measurement-noise variance must be positive and finite (got {})",
                    self.r
                ),
            ));
        }
        if self.f.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(
                "kalman.f",
                "state transition must be finite".to_string(),
            ));
        }
        if !(self.x0[0].is_finite() && self.x0[1].is_finite()) {
            return Err(Error::config(
                "kalman.x0",
                "prior estimate must be finite".to_string(),
            ));
        }
        check_symmetric_psd(&self.q, "kalman.q", false)?;
        check_symmetric_psd(&self.p0, "kalman.p0", true)?;
        Ok(())
    }
}

/// Symmetric PSD (or PD when `strict`) check for a 2x2 covariance-like
/// matrix; symmetric 2x2 is PSD iff both diagonal entries and the
/// determinant are non-negative.
fn check_symmetric_psd(m: &Matrix2<f64>, path: &str, strict: bool) -> Result<(), Error> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(
            path,
            "matrix entries must be finite".to_string(),
        ));
    }
    let scale = m.abs().max().max(1.0);
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * scale {
        return Err(Error::config(path, "matrix must be symmetric".to_string()));
    }
    let det = m.determinant();
    let ok = if strict {
        m[(0, 0)] > 0.0 && m[(1, 1)] > 0.0 && det > 0.0
    } else {
        m[(0, 0)] >= 0.0 && m[(1, 1)] >= 0.0 && det >= -1e-12 * scale * scale
    };
    if !ok {
        let kind = if strict {
            "positive definite"
        } else {
            "positive semidefinite"
        };
        return Err(Error::config(path, format!("matrix must be {kind}")));
    }
    Ok(())
}

/// Filter state after `k` measurement updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    /// State estimate `[vth, zth]`.
    pub x: Vector2<f64>,
    /// Estimate covariance; symmetric positive definite.
    pub p: Matrix2<f64>,
    /// Number of measurement updates absorbed.
    pub k: u64,
}

impl KalmanState {
    pub fn new(cfg: &KalmanConfig) -> Self {
        Self {
            x: cfg.x0,
            p: cfg.p0,
            k: 0,
        }
    }

    /// Time update: `x <- F x + B u`, `P <- F P F' + Q`. The scenario runner
    /// passes a zero `B u`; the term is kept in the signature so a control
    /// input can be wired in without touching the filter.
    pub fn predict(self, cfg: &KalmanConfig, b: &Matrix2<f64>, u: &Vector2<f64>) -> KalmanState {
        let x = cfg.f * self.x + b * u;
        let p = cfg.f * self.p * cfg.f.transpose() + cfg.q;
        let p = (p + p.transpose()) * 0.5;
        KalmanState { x, p, k: self.k }
    }

    /// Measurement update with regressor `h` and scalar measurement `z`.
    ///
    /// The innovation variance `r + h' P h` is positive for any valid state;
    /// checked defensively, like the least-squares twin.
    pub fn update(self, cfg: &KalmanConfig, h: Vector2<f64>, z: f64) -> Result<KalmanState, Error> {
        let ph = self.p * h;
        let s = cfg.r + h.dot(&ph);
        if s <= 0.0 || s.is_nan() {
            return Err(Error::NumericalBreakdown {
                context: "kalman innovation variance",
                reason: format!("r + h'Ph = {s} must be positive"),
            });
        }
        let gain = ph / s;
        let innovation = z - h.dot(&self.x);
        let x = self.x + gain * innovation;
        let p = self.p - gain * ph.transpose();
        let p = (p + p.transpose()) * 0.5;
        Ok(KalmanState {
            x,
            p,
            k: self.k + 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rwls::{LsqState, RwlsConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn static_cfg(r: f64, p0: f64) -> KalmanConfig {
        KalmanConfig {
            f: Matrix2::identity(),
            q: Matrix2::zeros(),
            r,
            x0: Vector2::zeros(),
            p0: Matrix2::identity() * p0,
        }
    }

    #[test]
    fn static_predict_is_a_no_op() {
        let cfg = static_cfg(1.0, 10.0);
        let state = KalmanState {
            x: Vector2::new(3.0, -1.0),
            p: Matrix2::new(2.0, 0.5, 0.5, 1.0),
            k: 5,
        };
        let next = state.predict(&cfg, &Matrix2::zeros(), &Vector2::zeros());
        assert_eq!(next.x, state.x);
        assert_eq!(next.p, state.p);
        assert_eq!(next.k, 5);
    }

    #[test]
    fn covariance_prediction_matches_hand_evaluation() {
        // Oracle: F P F' + Q worked out by hand for a non-trivial F.
        let f = Matrix2::new(1.0, 0.1, 0.0, 1.0);
        let q = Matrix2::new(0.01, 0.0, 0.0, 0.02);
        let cfg = KalmanConfig {
            f,
            q,
            ..KalmanConfig::default()
        };
        let p = Matrix2::new(4.0, 1.0, 1.0, 9.0);
        // row-by-row: FP = [[4.1, 1.9], [1.0, 9.0]];
        // FPF' = [[4.1 + 0.19, 1.9], [1.9, 9.0]]
        let expected = Matrix2::new(4.29 + 0.01, 1.9, 1.9, 9.02);
        let state = KalmanState {
            x: Vector2::zeros(),
            p,
            k: 0,
        };
        let next = state.predict(&cfg, &Matrix2::zeros(), &Vector2::zeros());
        assert_relative_eq!(next.p[(0, 0)], expected[(0, 0)], max_relative = 1e-14);
        assert_relative_eq!(next.p[(0, 1)], expected[(0, 1)], max_relative = 1e-14);
        assert_relative_eq!(next.p[(1, 0)], expected[(1, 0)], max_relative = 1e-14);
        assert_relative_eq!(next.p[(1, 1)], expected[(1, 1)], max_relative = 1e-14);
    }

    #[test]
    fn first_component_tracks_the_running_mean() {
        // Oracle: with h = [1, 0], r = 1, no process noise, and a diffuse
        // prior, the filter is a running mean of the measurements.
        let cfg = static_cfg(1.0, 1e9);
        let mut state = KalmanState::new(&cfg);
        let mut sum = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 1..=100 {
            let z: f64 = 5.0 + rng.random_range(-1.0..1.0);
            sum += z;
            state = state.update(&cfg, Vector2::new(1.0, 0.0), z).unwrap();
            assert!(
                (state.x[0] - sum / n as f64).abs() < 1e-6,
                "n = {n}: {} vs {}",
                state.x[0],
                sum / n as f64
            );
        }
        assert_eq!(state.k, 100);
    }

    #[test]
    fn matches_unit_forgetting_least_squares_exactly() {
        // The equivalence: F = I, Q = 0, zero control, weight = 1/r,
        // forgetting = 1, identical priors. Trajectories must agree to
        // 1e-9; with r = 0.25 they agree bit for bit.
        let r = 0.25;
        let kf_cfg = static_cfg(r, 1e6);
        let ls_cfg = RwlsConfig {
            theta0: Vector2::zeros(),
            p0: 1e6,
            forgetting: 1.0,
            weight: 1.0 / r,
        };
        let mut kf = KalmanState::new(&kf_cfg);
        let mut ls = LsqState::new(&ls_cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let b = Matrix2::zeros();
        let u = Vector2::zeros();
        for _ in 0..1000 {
            let h = Vector2::new(1.0, rng.random_range(5.0..15.0));
            let z = 245.0 + 1.42 * h[1] + rng.random_range(-0.5..0.5);
            kf = kf.predict(&kf_cfg, &b, &u).update(&kf_cfg, h, z).unwrap();
            ls = ls.update(&ls_cfg, h, z).unwrap();
            let dx = (kf.x - ls.theta).abs().max();
            let dp = (kf.p - ls.cov).abs().max();
            assert!(dx <= 1e-9 && dp <= 1e-9, "dx = {dx}, dp = {dp}");
        }
    }

    #[test]
    fn update_contracts_covariance_along_the_regressor() {
        let cfg = static_cfg(0.5, 100.0);
        let mut state = KalmanState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let h = Vector2::new(1.0, rng.random_range(-3.0..3.0));
            let before = (h.transpose() * state.p * h)[0];
            state = state.update(&cfg, h, rng.random_range(-1.0..1.0)).unwrap();
            let after = (h.transpose() * state.p * h)[0];
            assert!(after <= before * (1.0 + 1e-12));
        }
    }

    #[test]
    fn process_noise_inflates_covariance_along_every_direction() {
        let cfg = KalmanConfig::default(); // F = I, Q = diag(1e-4, 1e-6)
        let state = KalmanState {
            x: Vector2::zeros(),
            p: Matrix2::new(1.0, 0.2, 0.2, 0.5),
            k: 0,
        };
        let next = state.predict(&cfg, &Matrix2::zeros(), &Vector2::zeros());
        for h in [
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(0.7, -0.7),
        ] {
            let before = (h.transpose() * state.p * h)[0];
            let after = (h.transpose() * next.p * h)[0];
            assert!(after >= before);
        }
    }

    #[test]
    fn covariance_stays_symmetric_positive_definite() {
        let cfg = KalmanConfig::default();
        let mut state = KalmanState::new(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let b = Matrix2::zeros();
        let u = Vector2::zeros();
        for k in 0..20_000 {
            let h = Vector2::new(1.0, 10.0 + rng.random_range(-1.0..1.0));
            let z = 245.0 + 1.42 * h[1] + rng.random_range(-0.5..0.5);
            state = state.predict(&cfg, &b, &u).update(&cfg, h, z).unwrap();
            assert_eq!(state.p[(0, 1)], state.p[(1, 0)]);
            if k % 100 == 0 {
                assert!(state.p.trace() > 0.0);
                assert!(state.p.determinant() > 0.0);
            }
        }
    }

    #[test]
    fn rejects_invalid_tunables() {
        let zero_r = KalmanConfig {
            r: 0.0,
            ..KalmanConfig::default()
        };
        assert!(zero_r.validate().is_err());

        let asymmetric_q = KalmanConfig {
            q: Matrix2::new(1e-4, 1.0, -1.0, 1e-6),
            ..KalmanConfig::default()
        };
        assert!(asymmetric_q.validate().is_err());

        let negative_q = KalmanConfig {
            q: Matrix2::new(-1e-4, 0.0, 0.0, 1e-6),
            ..KalmanConfig::default()
        };
        assert!(negative_q.validate().is_err());

        let singular_p0 = KalmanConfig {
            p0: Matrix2::zeros(),
            ..KalmanConfig::default()
        };
        assert!(singular_p0.validate().is_err());

        assert!(KalmanConfig::default().validate().is_ok());
    }
}
