//! Deterministic scenario runner and summary statistics.
//!
//! A [`Scenario`] describes a piecewise-constant source (one [`Segment`]
//! per dwell), the probing currents, and the estimator stack. The runner
//! steps the closed loop at a fixed rate and emits one [`SampleRecord`]
//! per step; [`summarize`] reduces a record stream to per-segment
//! convergence metrics.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::Error;
use crate::esc::{EscConfig, EscState};
use crate::kalman::{KalmanConfig, KalmanState};
use crate::noise::NoiseChannel;
use crate::phasor::{node_voltage, Phasor, TheveninParams};
use crate::rwls::{LsqState, RwlsConfig};

/// Default steady injection magnitude (A).
pub const DEFAULT_BASE_CURRENT: f64 = 20.0;
/// Default magnitude-dither amplitude (A).
pub const DEFAULT_MAG_DITHER_AMPLITUDE: f64 = 1.0;
/// Default magnitude-dither frequency (Hz); deliberately incommensurate
/// with the angle dither so the two probes separate cleanly.
pub const DEFAULT_MAG_DITHER_FREQ_HZ: f64 = 1.3;
/// Default sample interval (s).
pub const DEFAULT_SAMPLE_DT: f64 = 0.01;
/// Dwell a signal must hold inside its band to count as settled (s).
pub const SETTLE_DWELL_S: f64 = 5.0;

/// One constant-parameter dwell of the source being identified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Dwell start (s), inclusive.
    pub t_start: f64,
    /// Dwell end (s), exclusive.
    pub t_end: f64,
    /// Source magnitude (V).
    pub vth: f64,
    /// Source impedance magnitude (ohm).
    pub zth: f64,
    /// Source impedance angle (rad).
    pub alpha: f64,
}

/// Which estimators run during a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSet {
    pub esc: bool,
    pub rwls: bool,
    pub kalman: bool,
}

impl Default for EstimatorSet {
    fn default() -> Self {
        Self {
            esc: true,
            rwls: true,
            kalman: true,
        }
    }
}

/// Full description of a closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Piecewise-constant source schedule; contiguous from t = 0.
    pub segments: Vec<Segment>,
    /// Steady injection magnitude (A).
    pub base_current: f64,
    /// Magnitude-dither amplitude (A); strictly below `base_current`.
    pub mag_dither_amplitude: f64,
    /// Magnitude-dither angular frequency (rad/s).
    pub mag_dither_freq: f64,
    /// Sample interval (s); must equal `esc.sample_dt`.
    pub sample_dt: f64,
    /// Run length (s); at most the final segment end.
    pub duration: f64,
    /// Which estimators are active.
    pub estimators: EstimatorSet,
    pub esc: EscConfig,
    pub rwls: RwlsConfig,
    pub kalman: KalmanConfig,
    /// Measurement-noise standard deviation (V).
    pub noise_sigma: f64,
    /// Noise-stream seed.
    pub seed: u64,
}

impl Scenario {
    /// Scenario over `segments` with every tunable at its default and the
    /// duration covering the whole schedule.
    pub fn new(segments: Vec<Segment>) -> Self {
        let duration = segments.last().map_or(0.0, |s| s.t_end);
        Self {
            segments,
            base_current: DEFAULT_BASE_CURRENT,
            mag_dither_amplitude: DEFAULT_MAG_DITHER_AMPLITUDE,
            mag_dither_freq: std::f64::consts::TAU * DEFAULT_MAG_DITHER_FREQ_HZ,
            sample_dt: DEFAULT_SAMPLE_DT,
            duration,
            estimators: EstimatorSet::default(),
            esc: EscConfig::default(),
            rwls: RwlsConfig::default(),
            kalman: KalmanConfig::default(),
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.segments.is_empty() {
            return Err(Error::config(
                "scenario.segments",
                "at least one segment is required",
            ));
        }
        if self.segments[0].t_start.abs() > 1e-9 {
            return Err(Error::config(
                "scenario.segments[0].t_start",
                "schedule must start at t = 0",
            ));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !seg.t_start.is_finite() || !seg.t_end.is_finite() {
                return Err(Error::config(
                    format!("scenario.segments[{i}].t_end"),
                    "segment bounds must be finite",
                ));
            }
            if seg.t_end <= seg.t_start {
                return Err(Error::config(
                    format!("scenario.segments[{i}].t_end"),
                    "segment end must exceed its start",
                ));
            }
            if i > 0 && (seg.t_start - self.segments[i - 1].t_end).abs() > 1e-9 {
                return Err(Error::config(
                    format!("scenario.segments[{i}].t_start"),
                    "segments must be contiguous",
                ));
            }
            segment_params(seg, i)?;
        }
        if !(self.base_current > 0.0 && self.base_current.is_finite()) {
            return Err(Error::config(
                "scenario.base_current",
                format!("must be positive and finite (got {})", self.base_current),
            ));
        }
        if self.mag_dither_amplitude < 0.0 || !self.mag_dither_amplitude.is_finite() {
            return Err(Error::config(
                "scenario.mag_dither_amplitude",
                format!(
                    "must be non-negative and finite (got {})",
                    self.mag_dither_amplitude
                ),
            ));
        }
        if self.mag_dither_amplitude >= self.base_current {
            return Err(Error::config(
                "scenario.mag_dither_amplitude",
                "must stay below base_current so the injection never reverses",
            ));
        }
        if !(self.mag_dither_freq > 0.0 && self.mag_dither_freq.is_finite()) {
            return Err(Error::config(
                "scenario.mag_dither_freq_hz",
                format!(
                    "must be positive and finite (got {} rad/s)",
                    self.mag_dither_freq
                ),
            ));
        }
        if self.mag_dither_freq * self.sample_dt >= std::f64::consts::PI {
            return Err(Error::config(
                "scenario.mag_dither_freq_hz",
                "magnitude dither must stay below the Nyquist rate",
            ));
        }
        let ratio = self.mag_dither_freq / self.esc.dither_freq;
        if ratio.round() >= 1.0 && (ratio - ratio.round()).abs() < 1e-9 {
            return Err(Error::config(
                "scenario.mag_dither_freq_hz",
                "must not be an integer multiple of the angle-dither frequency",
            ));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config(
                "scenario.duration",
                format!("must be positive and finite (got {})", self.duration),
            ));
        }
        let schedule_end = self.segments.last().map_or(0.0, |s| s.t_end);
        if self.duration > schedule_end + 1e-9 {
            return Err(Error::config(
                "scenario.duration",
                format!(
                    "run of {} s extends past the final segment end at {} s",
                    self.duration, schedule_end
                ),
            ));
        }
        self.esc.validate()?;
        if self.esc.sample_dt != self.sample_dt {
            return Err(Error::config(
                "scenario.sample_dt",
                "must equal esc.sample_dt; the loop runs both at one rate",
            ));
        }
        self.rwls.validate()?;
        self.kalman.validate()?;
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::config(
                "noise.sigma",
                format!("must be non-negative and finite (got {})", self.noise_sigma),
            ));
        }
        Ok(())
    }
}

/// Build the circuit parameters for a segment, pointing errors at the
/// segment's own config path.
fn segment_params(seg: &Segment, index: usize) -> Result<TheveninParams, Error> {
    TheveninParams::new(seg.vth, seg.zth, seg.alpha).map_err(|e| match e {
        Error::Config { path, reason } => Error::Config {
            path: format!("scenario.segments[{index}].{path}"),
            reason,
        },
        other => other,
    })
}

/// One simulation step. Estimator columns are `None` when the estimator
/// was disabled for the run. Angles that describe the impedance are kept
/// in degrees; the commanded injection angle stays in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord {
    /// Time (s).
    pub t: f64,
    /// Injection magnitude applied this step (A).
    pub ij: f64,
    /// Injection angle commanded this step (rad).
    pub theta_cmd: f64,
    /// Noise-free voltage magnitude (V).
    pub v_true: f64,
    /// Measured voltage magnitude (V).
    pub v_meas: f64,
    /// Impedance-angle estimate (deg).
    pub alpha_hat_deg: Option<f64>,
    /// Source-magnitude estimate from the forgetting recursion (V).
    pub vth_rwls: Option<f64>,
    /// Impedance-magnitude estimate from the forgetting recursion (ohm).
    pub zth_rwls: Option<f64>,
    /// Source-magnitude estimate from the Kalman filter (V).
    pub vth_kf: Option<f64>,
    /// Impedance-magnitude estimate from the Kalman filter (ohm).
    pub zth_kf: Option<f64>,
    /// True impedance angle (deg).
    pub alpha_true_deg: f64,
    /// True impedance magnitude (ohm).
    pub zth_true: f64,
    /// True source magnitude (V).
    pub vth_true: f64,
}

/// Run a scenario start to finish and collect every step.
///
/// The run is fully deterministic: the same scenario and seed reproduce
/// the record stream bit for bit. The measurement-noise draw happens on
/// every step whether or not any estimator consumes it, so the measured
/// trace does not depend on which estimators are enabled.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<SampleRecord>, Error> {
    scenario.validate()?;
    let dt = scenario.sample_dt;
    let n_steps = (scenario.duration / dt).round() as u64;
    if n_steps == 0 {
        return Err(Error::config(
            "scenario.duration",
            "run is shorter than one sample interval",
        ));
    }

    // Pre-resolve each segment to circuit parameters and a starting step
    // index; selecting by index keeps dwell boundaries exact instead of
    // fuzzy at accumulated-float segment edges.
    let mut seg_params = Vec::with_capacity(scenario.segments.len());
    let mut seg_start_step = Vec::with_capacity(scenario.segments.len());
    for (i, seg) in scenario.segments.iter().enumerate() {
        seg_params.push((segment_params(seg, i)?, seg.alpha.to_degrees()));
        seg_start_step.push((seg.t_start / dt).round() as u64);
    }

    let mut noise = NoiseChannel::new(scenario.noise_sigma, scenario.seed)?;
    let est = scenario.estimators;
    let mut esc_state = EscState::new(&scenario.esc);
    let mut rwls_state = LsqState::new(&scenario.rwls);
    let mut kf_state = KalmanState::new(&scenario.kalman);
    let b_zero = Matrix2::zeros();
    let u_zero = Vector2::zeros();

    let mut records = Vec::with_capacity(n_steps as usize);
    let mut cursor = 0usize;
    for k in 0..n_steps {
        let t = k as f64 * dt;
        while cursor + 1 < seg_start_step.len() && k >= seg_start_step[cursor + 1] {
            cursor += 1;
        }
        let (params, alpha_true_deg) = &seg_params[cursor];

        let ij = scenario.base_current
            + scenario.mag_dither_amplitude * (scenario.mag_dither_freq * t).sin();
        let theta_cmd = if est.esc {
            esc_state.command(&scenario.esc)
        } else {
            scenario.esc.theta0
        };
        let injection = Phasor::new(ij, theta_cmd);
        let v_true = node_voltage(params, injection).magnitude();
        let v_meas = noise.measure(v_true);

        if est.esc {
            esc_state = esc_state.step(&scenario.esc, v_meas * v_meas);
        }
        let h = Vector2::new(1.0, ij);
        if est.rwls {
            rwls_state = rwls_state.update(&scenario.rwls, h, v_meas)?;
        }
        if est.kalman {
            kf_state = kf_state
                .predict(&scenario.kalman, &b_zero, &u_zero)
                .update(&scenario.kalman, h, v_meas)?;
        }

        records.push(SampleRecord {
            t,
            ij,
            theta_cmd,
            v_true,
            v_meas,
            alpha_hat_deg: est.esc.then(|| esc_state.alpha_estimate().to_degrees()),
            vth_rwls: est.rwls.then(|| rwls_state.theta[0]),
            zth_rwls: est.rwls.then(|| rwls_state.theta[1]),
            vth_kf: est.kalman.then(|| kf_state.x[0]),
            zth_kf: est.kalman.then(|| kf_state.x[1]),
            alpha_true_deg: *alpha_true_deg,
            zth_true: params.zth(),
            vth_true: params.vth(),
        });
    }
    Ok(records)
}

/// Acceptance bands used when reducing a run to summary metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryBands {
    /// Impedance-angle band (deg).
    pub alpha_deg: f64,
    /// Impedance-magnitude band (ohm).
    pub zth: f64,
    /// Source-magnitude band (V).
    pub vth: f64,
}

impl Default for SummaryBands {
    fn default() -> Self {
        Self {
            alpha_deg: 1.0,
            zth: 0.1,
            vth: 1.0,
        }
    }
}

/// Convergence metrics for one estimated signal inside one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalSummary {
    /// Mean of the estimate over the trailing window.
    pub mean_estimate: f64,
    /// Mean of (estimate - truth) over the trailing window.
    pub mean_error: f64,
    /// Population standard deviation of the error over the trailing window.
    pub std_dev: f64,
    /// Mean of the estimate over the whole segment.
    pub trajectory_mean: f64,
    /// First absolute time at which the estimate enters its band and dwells
    /// there for at least [`SETTLE_DWELL_S`]; `None` if that never happens.
    pub settling_time_s: Option<f64>,
    /// Band half-width the settling test used.
    pub band: f64,
}

/// Per-segment metrics: the truth during the dwell plus one summary per
/// active estimated signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentSummary {
    pub t_start: f64,
    pub t_end: f64,
    pub vth_true: f64,
    pub zth_true: f64,
    pub alpha_true_deg: f64,
    pub alpha_esc_deg: Option<SignalSummary>,
    pub vth_rwls: Option<SignalSummary>,
    pub zth_rwls: Option<SignalSummary>,
    pub vth_kf: Option<SignalSummary>,
    pub zth_kf: Option<SignalSummary>,
}

/// Whole-run reduction of a record stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryMetrics {
    /// Sample interval inferred from the stream (s).
    pub sample_dt: f64,
    /// Trailing-window length the means were taken over (s).
    pub settle_window_s: f64,
    pub segments: Vec<SegmentSummary>,
}

/// Reduce a record stream to per-segment metrics.
///
/// Segments are recovered from changes in the truth columns, so the
/// stream summarizes correctly without the scenario that produced it.
/// `settle_window` is the trailing span (s) the steady-state means are
/// taken over; it must fit inside every segment.
pub fn summarize(
    records: &[SampleRecord],
    settle_window: f64,
    bands: &SummaryBands,
) -> Result<SummaryMetrics, Error> {
    if records.len() < 2 {
        return Err(Error::SummaryInput {
            reason: format!("need at least two samples, got {}", records.len()),
        });
    }
    if !(settle_window > 0.0 && settle_window.is_finite()) {
        return Err(Error::SummaryInput {
            reason: format!("settle window must be positive and finite (got {settle_window})"),
        });
    }
    let dt = records[1].t - records[0].t;
    if dt <= 0.0 || dt.is_nan() {
        return Err(Error::SummaryInput {
            reason: "sample times must be strictly increasing".to_string(),
        });
    }

    // Split on truth-column changes.
    let mut bounds = vec![0usize];
    for i in 1..records.len() {
        let (a, b) = (&records[i - 1], &records[i]);
        if a.vth_true != b.vth_true
            || a.zth_true != b.zth_true
            || a.alpha_true_deg != b.alpha_true_deg
        {
            bounds.push(i);
        }
    }
    bounds.push(records.len());

    let mut segments = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let seg = &records[w[0]..w[1]];
        let first = &seg[0];
        let last = &seg[seg.len() - 1];
        // the next segment's first sample gives the boundary exactly; the
        // final segment reconstructs it from the step index to avoid the
        // rounding of naive `last.t + dt`
        let t_end = if w[1] < records.len() {
            records[w[1]].t
        } else {
            ((last.t / dt).round() + 1.0) * dt
        };
        let span = last.t - first.t + dt;
        if settle_window > span + 1e-9 {
            return Err(Error::SummaryInput {
                reason: format!(
                    "settle window of {settle_window} s exceeds the {span} s segment starting at t = {} s",
                    first.t
                ),
            });
        }
        let window_from = last.t - settle_window;
        let win_start = seg.partition_point(|r| r.t <= window_from);
        let dwell_steps = ((SETTLE_DWELL_S / dt).round() as usize).max(1);

        segments.push(SegmentSummary {
            t_start: first.t,
            t_end,
            vth_true: first.vth_true,
            zth_true: first.zth_true,
            alpha_true_deg: first.alpha_true_deg,
            alpha_esc_deg: summarize_signal(
                seg,
                win_start,
                dwell_steps,
                bands.alpha_deg,
                first.alpha_true_deg,
                |r| r.alpha_hat_deg,
            ),
            vth_rwls: summarize_signal(
                seg,
                win_start,
                dwell_steps,
                bands.vth,
                first.vth_true,
                |r| r.vth_rwls,
            ),
            zth_rwls: summarize_signal(
                seg,
                win_start,
                dwell_steps,
                bands.zth,
                first.zth_true,
                |r| r.zth_rwls,
            ),
            vth_kf: summarize_signal(
                seg,
                win_start,
                dwell_steps,
                bands.vth,
                first.vth_true,
                |r| r.vth_kf,
            ),
            zth_kf: summarize_signal(
                seg,
                win_start,
                dwell_steps,
                bands.zth,
                first.zth_true,
                |r| r.zth_kf,
            ),
        });
    }

    Ok(SummaryMetrics {
        sample_dt: dt,
        settle_window_s: settle_window,
        segments,
    })
}

fn summarize_signal(
    seg: &[SampleRecord],
    win_start: usize,
    dwell_steps: usize,
    band: f64,
    truth: f64,
    get: impl Fn(&SampleRecord) -> Option<f64>,
) -> Option<SignalSummary> {
    get(&seg[0])?;
    let values: Vec<f64> = seg.iter().map(|r| get(r).unwrap_or(f64::NAN)).collect();

    let window = &values[win_start..];
    let n = window.len() as f64;
    let mean_estimate = window.iter().sum::<f64>() / n;
    let mean_error = mean_estimate - truth;
    let var = window
        .iter()
        .map(|v| {
            let e = v - truth - mean_error;
            e * e
        })
        .sum::<f64>()
        / n;
    let trajectory_mean = values.iter().sum::<f64>() / values.len() as f64;

    // First in-band run at least `dwell_steps` long.
    let mut settling_time_s = None;
    let mut run_start = None;
    for (i, v) in values.iter().enumerate() {
        if (v - truth).abs() <= band {
            let start = *run_start.get_or_insert(i);
            if i - start + 1 >= dwell_steps {
                settling_time_s = Some(seg[start].t);
                break;
            }
        } else {
            run_start = None;
        }
    }

    Some(SignalSummary {
        mean_estimate,
        mean_error,
        std_dev: var.sqrt(),
        trajectory_mean,
        settling_time_s,
        band,
    })
}
