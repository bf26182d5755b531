//! JSON configuration for scenario runs.
//!
//! The document is strict: unknown keys are rejected, and every
//! validation error names the offending key with its JSON path. Angles
//! are written in degrees (keys carry a `_deg` suffix) and frequencies
//! in hertz (`_hz`); the loader converts to radians once.

use serde::Deserialize;
use std::f64::consts::TAU;

use crate::error::Error;
use crate::esc::EscConfig;
use crate::kalman::KalmanConfig;
use crate::rwls::RwlsConfig;
use crate::sim::{EstimatorSet, Scenario, Segment, SummaryBands};

use nalgebra::{Matrix2, Vector2};

/// Post-run reduction settings carried next to the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputSettings {
    /// Trailing window for steady-state means (s).
    pub settle_window: f64,
    /// Bands used by the settling test.
    pub bands: SummaryBands,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            settle_window: 10.0,
            bands: SummaryBands::default(),
        }
    }
}

/// A fully resolved config document: the scenario plus output settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub scenario: Scenario,
    pub output: OutputSettings,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    esc: Option<RawEsc>,
    rwls: Option<RawRwls>,
    kalman: Option<RawKalman>,
    noise: Option<RawNoise>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    segments: Vec<RawSegment>,
    base_current: Option<f64>,
    mag_dither_amplitude: Option<f64>,
    mag_dither_freq_hz: Option<f64>,
    sample_dt: Option<f64>,
    duration: Option<f64>,
    estimators: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    t_start: f64,
    t_end: f64,
    vth: f64,
    zth: f64,
    alpha_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEsc {
    dither_amplitude_deg: Option<f64>,
    dither_freq_hz: Option<f64>,
    hpf_cutoff_hz: Option<f64>,
    gain: Option<f64>,
    theta0_deg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRwls {
    forgetting: Option<f64>,
    p0: Option<f64>,
    weight: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKalman {
    /// Diagonal of the process-noise covariance.
    q: Option<[f64; 2]>,
    r: Option<f64>,
    x0: Option<[f64; 2]>,
    /// Scalar prior covariance; expands to `p0 * I`.
    p0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    sigma: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    settle_window: Option<f64>,
    bands: Option<RawBands>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBands {
    alpha_deg: Option<f64>,
    zth: Option<f64>,
    vth: Option<f64>,
}

impl ConfigDocument {
    /// Parse and fully validate a JSON document.
    ///
    /// Syntax and shape problems come back as [`Error::ConfigSyntax`] with
    /// the JSON path of the offending token; range problems come back as
    /// [`Error::Config`] naming the key.
    pub fn from_json_str(text: &str) -> Result<ConfigDocument, Error> {
        let mut de = serde_json::Deserializer::from_str(text);
        let raw: RawConfig =
            serde_path_to_error::deserialize(&mut de).map_err(|e| Error::ConfigSyntax {
                path: e.path().to_string(),
                detail: e.inner().to_string(),
            })?;
        de.end().map_err(|e| Error::ConfigSyntax {
            path: ".".to_string(),
            detail: e.to_string(),
        })?;
        resolve(raw)
    }
}

fn resolve(raw: RawConfig) -> Result<ConfigDocument, Error> {
    let segments: Vec<Segment> = raw
        .scenario
        .segments
        .iter()
        .map(|s| Segment {
            t_start: s.t_start,
            t_end: s.t_end,
            vth: s.vth,
            zth: s.zth,
            alpha: s.alpha_deg.to_radians(),
        })
        .collect();

    let mut scenario = Scenario::new(segments);
    if let Some(v) = raw.scenario.base_current {
        scenario.base_current = v;
    }
    if let Some(v) = raw.scenario.mag_dither_amplitude {
        scenario.mag_dither_amplitude = v;
    }
    if let Some(v) = raw.scenario.mag_dither_freq_hz {
        scenario.mag_dither_freq = TAU * v;
    }
    if let Some(v) = raw.scenario.sample_dt {
        scenario.sample_dt = v;
    }
    if let Some(v) = raw.scenario.duration {
        scenario.duration = v;
    }
    if let Some(names) = &raw.scenario.estimators {
        let mut set = EstimatorSet {
            esc: false,
            rwls: false,
            kalman: false,
        };
        for (i, name) in names.iter().enumerate() {
            match name.as_str() {
                "esc" => set.esc = true,
                "rwls" => set.rwls = true,
                "kalman" => set.kalman = true,
                other => {
                    return Err(Error::config(
                        format!("scenario.estimators[{i}]"),
                        format!("unknown estimator `{other}`; expected esc, rwls, or kalman"),
                    ))
                }
            }
        }
        scenario.estimators = set;
    }

    let mut esc = EscConfig::default();
    if let Some(raw_esc) = &raw.esc {
        if let Some(v) = raw_esc.dither_amplitude_deg {
            esc.dither_amplitude = v.to_radians();
        }
        if let Some(v) = raw_esc.dither_freq_hz {
            esc.dither_freq = TAU * v;
        }
        if let Some(v) = raw_esc.hpf_cutoff_hz {
            esc.hpf_cutoff = TAU * v;
        }
        if let Some(v) = raw_esc.gain {
            esc.gain = v;
        }
        if let Some(v) = raw_esc.theta0_deg {
            esc.theta0 = v.to_radians();
        }
    }
    esc.sample_dt = scenario.sample_dt;
    scenario.esc = esc;

    let mut rwls = RwlsConfig::default();
    if let Some(raw_rwls) = &raw.rwls {
        if let Some(v) = raw_rwls.forgetting {
            rwls.forgetting = v;
        }
        if let Some(v) = raw_rwls.p0 {
            rwls.p0 = v;
        }
        if let Some(v) = raw_rwls.weight {
            rwls.weight = v;
        }
    }
    scenario.rwls = rwls;

    let mut kalman = KalmanConfig::default();
    if let Some(raw_kf) = &raw.kalman {
        if let Some(q) = raw_kf.q {
            kalman.q = Matrix2::new(q[0], 0.0, 0.0, q[1]);
        }
        if let Some(v) = raw_kf.r {
            kalman.r = v;
        }
        if let Some(x0) = raw_kf.x0 {
            kalman.x0 = Vector2::new(x0[0], x0[1]);
        }
        if let Some(v) = raw_kf.p0 {
            kalman.p0 = Matrix2::identity() * v;
        }
    }
    scenario.kalman = kalman;

    if let Some(noise) = &raw.noise {
        if let Some(v) = noise.sigma {
            scenario.noise_sigma = v;
        }
        if let Some(v) = noise.seed {
            scenario.seed = v;
        }
    }

    scenario.validate()?;

    let mut output = OutputSettings::default();
    if let Some(raw_out) = &raw.output {
        if let Some(v) = raw_out.settle_window {
            output.settle_window = v;
        }
        if let Some(bands) = &raw_out.bands {
            if let Some(v) = bands.alpha_deg {
                output.bands.alpha_deg = v;
            }
            if let Some(v) = bands.zth {
                output.bands.zth = v;
            }
            if let Some(v) = bands.vth {
                output.bands.vth = v;
            }
        }
    }
    if !(output.settle_window > 0.0 && output.settle_window.is_finite()) {
        return Err(Error::config(
            "output.settle_window",
            format!("must be positive and finite (got {})", output.settle_window),
        ));
    }
    for (value, path) in [
        (output.bands.alpha_deg, "output.bands.alpha_deg"),
        (output.bands.zth, "output.bands.zth"),
        (output.bands.vth, "output.bands.vth"),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::config(
                path,
                format!("band half-width must be positive and finite (got {value})"),
            ));
        }
    }

    Ok(ConfigDocument { scenario, output })
}
