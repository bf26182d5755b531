//! Phasor arithmetic and the single-node Thevenin circuit model.
//!
//! A phasor is a magnitude/angle pair describing one AC quantity at the
//! system frequency. All composition goes through rectangular
//! (real/imaginary) form, so sums and products are plain complex arithmetic;
//! polar form only appears at the API boundary. Angles are always wrapped
//! onto `(-pi, pi]`.
//!
//! The circuit is the classic one-port seen from a measured node: a source
//! `vth` at angle zero behind an impedance `zth` at angle `alpha`. Injecting
//! a current phasor moves the node voltage, and [`node_voltage`] evaluates
//! exactly that. [`voltage_magnitude_squared`] gives three algebraically
//! equal closed forms of `|V|^2`; the half-angle form makes it obvious that
//! the magnitude peaks when the injection angle equals `-alpha`, which is
//! what the extremum-seeking loop exploits.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::Error;

/// Wrap an angle in radians onto `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI); // [0, 2pi), or 2pi after rounding
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// One AC quantity in polar form, magnitude >= 0 and angle in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    magnitude: f64,
    angle: f64,
}

impl Phasor {
    /// Build from polar components. A negative magnitude is folded into a
    /// half-turn phase shift so the stored magnitude is always >= 0.
    pub fn new(magnitude: f64, angle: f64) -> Self {
        if magnitude < 0.0 {
            Self {
                magnitude: -magnitude,
                angle: normalize_angle(angle + PI),
            }
        } else {
            Self {
                magnitude,
                angle: normalize_angle(angle),
            }
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Angle in radians, in `(-pi, pi]`.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Rectangular form.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.angle)
    }

    /// From rectangular form.
    pub fn from_complex(c: Complex64) -> Self {
        Self {
            magnitude: c.norm(),
            angle: normalize_angle(c.arg()),
        }
    }
}

impl Add for Phasor {
    type Output = Phasor;

    fn add(self, rhs: Phasor) -> Phasor {
        Phasor::from_complex(self.to_complex() + rhs.to_complex())
    }
}

impl Mul for Phasor {
    type Output = Phasor;

    fn mul(self, rhs: Phasor) -> Phasor {
        Phasor::from_complex(self.to_complex() * rhs.to_complex())
    }
}

/// Source magnitude, impedance magnitude, and impedance angle of the
/// equivalent one-port seen from the measured node. Constructor-validated,
/// so a value of this type is always physically meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheveninParams {
    vth: f64,   // V
    zth: f64,   // ohm
    alpha: f64, // rad, |alpha| < pi/2
}

impl TheveninParams {
    /// Requires `vth > 0`, `zth > 0`, and `|alpha| < pi/2` (strictly
    /// inductive-to-capacitive range; the extremum argument needs a
    /// non-degenerate cosine).
    pub fn new(vth: f64, zth: f64, alpha: f64) -> Result<Self, Error> {
        if !(vth > 0.0 && vth.is_finite()) {
            return Err(Error::config(
                "vth",
                format!("source magnitude must be positive and finite (got {vth})"),
            ));
        }
        if !(zth > 0.0 && zth.is_finite()) {
            return Err(Error::config(
                "zth",
                format!("impedance magnitude must be positive and finite (got {zth})"),
            ));
        }
        if alpha.is_nan() || alpha.abs() >= PI / 2.0 {
            return Err(Error::config(
                "alpha",
                format!("impedance angle must satisfy |alpha| < pi/2 rad (got {alpha})"),
            ));
        }
        Ok(Self { vth, zth, alpha })
    }

    pub fn vth(&self) -> f64 {
        self.vth
    }

    pub fn zth(&self) -> f64 {
        self.zth
    }

    /// Impedance angle in radians.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Complex node voltage for one injection: the source at angle zero plus the
/// injection-driven rise across the Thevenin impedance.
pub fn node_voltage(params: &TheveninParams, injection: Phasor) -> Phasor {
    let source = Complex64::new(params.vth, 0.0);
    let z = Complex64::from_polar(params.zth, params.alpha);
    Phasor::from_complex(source + injection.to_complex() * z)
}

/// Closed forms for the squared node-voltage magnitude as a function of the
/// injected magnitude and angle. All three are the same polynomial in
/// disguise; they exist separately so tests can pin the algebra down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagSquaredForm {
    /// `vth^2 + (ij zth)^2 + 2 vth ij zth cos(theta + alpha)` — law of
    /// cosines on the voltage triangle.
    LawOfCosines,
    /// `(vth + ij zth)^2 + 2 vth ij zth (cos(theta + alpha) - 1)` — the same
    /// thing referenced to its peak value.
    PeakReferenced,
    /// `(vth + ij zth)^2 - 4 vth ij zth sin^2((theta + alpha)/2)` — peak
    /// minus a non-negative dip, so the maximizer `theta = -alpha` and the
    /// peak `(vth + ij zth)^2` can be read off directly.
    HalfAngleSine,
}

/// `|V|^2` for an injection of magnitude `ij >= 0` at angle `theta`.
pub fn voltage_magnitude_squared(
    params: &TheveninParams,
    ij: f64,
    theta: f64,
    form: MagSquaredForm,
) -> f64 {
    let vth = params.vth;
    let drop = ij * params.zth;
    let cross = 2.0 * vth * drop;
    let phase = theta + params.alpha;
    match form {
        MagSquaredForm::LawOfCosines => vth * vth + drop * drop + cross * phase.cos(),
        MagSquaredForm::PeakReferenced => {
            let peak = vth + drop;
            peak * peak + cross * (phase.cos() - 1.0)
        }
        MagSquaredForm::HalfAngleSine => {
            let peak = vth + drop;
            let s = (phase * 0.5).sin();
            peak * peak - 2.0 * cross * s * s
        }
    }
}
