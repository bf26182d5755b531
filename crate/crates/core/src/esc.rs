//! Extremum-seeking control of the injection angle.
//!
//! The loop climbs the squared voltage magnitude as a function of the
//! commanded current angle. Each sample period it
//!
//! 1. high-passes the cost through a one-pole filter (bilinear-transform
//!    coefficients from the cutoff and the sample period),
//! 2. demodulates the filtered cost against the dither sine,
//! 3. integrates the demodulated value into `theta_hat` (forward Euler), and
//! 4. advances the dither phase, wrapping it modulo 2 pi.
//!
//! The commanded angle is `theta_hat + a sin(phase)`; because the cost peaks
//! at the negated impedance angle, the settled estimate is
//! `alpha_hat = -theta_hat`. The demodulated signal feeds the integrator
//! directly — there is deliberately no extra low-pass in the path, so the
//! integrator itself does the averaging.

use std::f64::consts::{PI, TAU};

use crate::error::Error;

/// Tunables for the angle-seeking loop. Angles in radians, frequencies in
/// rad/s, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscConfig {
    /// Dither amplitude `a` added to the commanded angle (rad).
    pub dither_amplitude: f64,
    /// Dither frequency `w1` (rad/s).
    pub dither_freq: f64,
    /// High-pass cutoff `wh` (rad/s); must sit below `w1`.
    pub hpf_cutoff: f64,
    /// Integrator gain (1 / (V^2 s)); positive climbs toward the maximum.
    pub gain: f64,
    /// Sample period (s).
    pub sample_dt: f64,
    /// Initial `theta_hat` (rad). Also the frozen command when the loop is
    /// disabled in a scenario.
    pub theta0: f64,
}

impl Default for EscConfig {
    fn default() -> Self {
        Self {
            dither_amplitude: 0.15,
            dither_freq: TAU * 6.0,
            hpf_cutoff: TAU * 0.1,
            gain: 1.2e-4,
            sample_dt: 0.01,
            theta0: 0.0,
        }
    }
}

impl EscConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.dither_amplitude > 0.0 && self.dither_amplitude.is_finite()) {
            return Err(Error::config(
                "esc.dither_amplitude_deg",
                format!(
                    "dither amplitude must be positive and finite (got {} rad)",
                    self.dither_amplitude
                ),
            ));
        }
        if !(self.dither_freq > 0.0 && self.dither_freq.is_finite()) {
            return Err(Error::config(
                "esc.dither_freq_hz",
                format!(
                    "dither frequency must be positive and finite (got {} rad/s)",
                    self.dither_freq
                ),
            ));
        }
        if !(self.hpf_cutoff > 0.0 && self.hpf_cutoff.is_finite()) {
            return Err(Error::config(
                "esc.hpf_cutoff_hz",
                format!(
                    "high-pass cutoff must be positive and finite (got {} rad/s)",
                    self.hpf_cutoff
                ),
            ));
        }
        if self.hpf_cutoff >= self.dither_freq {
            return Err(Error::config(
                "esc.hpf_cutoff_hz",
                format!(
                    "high-pass cutoff ({} rad/s) must sit below the dither frequency ({} rad/s)",
                    self.hpf_cutoff, self.dither_freq
                ),
            ));
        }
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return Err(Error::config(
                "esc.gain",
                format!("gain must be finite and >= 0 (got {})", self.gain),
            ));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::config(
                "scenario.sample_dt",
                format!(
                    "sample period must be positive and finite (got {})",
                    self.sample_dt
                ),
            ));
        }
        if self.dither_freq * self.sample_dt >= PI {
            return Err(Error::config(
                "esc.dither_freq_hz",
                format!(
                    "dither frequency times sample period must stay below pi rad per step \
                     (got {:.4} rad)",
                    self.dither_freq * self.sample_dt
                ),
            ));
        }
        if !self.theta0.is_finite() {
            return Err(Error::config(
                "esc.theta0_deg",
                "initial angle must be finite".to_string(),
            ));
        }
        Ok(())
    }
}

/// Loop state. A plain value: stepping consumes the old state and returns
/// the new one, which keeps replays and comparisons trivial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscState {
    /// Current angle estimate (rad); the settled value is `-alpha`.
    pub theta_hat: f64,
    /// High-pass internal memory (transposed direct-form II).
    pub hpf_state: f64,
    /// Last high-pass output (V^2).
    pub hpf_y: f64,
    /// Dither phase (rad), kept in `[0, 2 pi)`.
    pub dither_phase: f64,
    /// Last demodulated sample (V^2).
    pub xi: f64,
}

impl EscState {
    pub fn new(cfg: &EscConfig) -> Self {
        Self {
            theta_hat: cfg.theta0,
            hpf_state: 0.0,
            hpf_y: 0.0,
            dither_phase: 0.0,
            xi: 0.0,
        }
    }

    /// The angle command for the current sample:
    /// `theta_hat + a sin(phase)`. Pure; does not advance anything.
    pub fn command(&self, cfg: &EscConfig) -> f64 {
        self.theta_hat + cfg.dither_amplitude * self.dither_phase.sin()
    }

    /// Absorb one cost sample (squared measured voltage) and return the next
    /// state. Demodulation uses the same phase that produced this sample's
    /// command; the phase advances afterwards.
    pub fn step(self, cfg: &EscConfig, cost: f64) -> EscState {
        // One-pole high-pass, bilinear transform of s / (s + wh).
        let two_over_dt = 2.0 / cfg.sample_dt;
        let a0 = two_over_dt + cfg.hpf_cutoff;
        let b0 = two_over_dt / a0;
        let a1 = (cfg.hpf_cutoff - two_over_dt) / a0;
        let hpf_y = b0 * cost + self.hpf_state;
        let hpf_state = -b0 * cost - a1 * hpf_y;

        let xi = hpf_y * self.dither_phase.sin();
        let theta_hat = self.theta_hat + cfg.gain * xi * cfg.sample_dt;
        let dither_phase = (self.dither_phase + cfg.dither_freq * cfg.sample_dt).rem_euclid(TAU);

        EscState {
            theta_hat,
            hpf_state,
            hpf_y,
            dither_phase,
            xi,
        }
    }

    /// Impedance-angle estimate implied by the current loop state (rad).
    pub fn alpha_estimate(&self) -> f64 {
        -self.theta_hat
    }
}
