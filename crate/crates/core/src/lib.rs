//! Online identification of the source equivalent behind a power-system
//! node, driven by a dual sinusoidal current probe.
//!
//! A controllable current source injects `ij ∠ theta` at the node. The
//! injection angle is steered by an extremum-seeking loop ([`esc`]) toward
//! the voltage-magnitude peak, which sits exactly opposite the source
//! impedance angle; the injection magnitude carries a slower dither so the
//! affine law `|v| ≈ vth + ij·zth` near that peak stays observable. Two
//! recursions fit it online — an exponentially forgetting least-squares
//! estimator ([`rwls`]) and a Kalman filter ([`kalman`]) — recovering the
//! source magnitude and impedance magnitude while the angle loop recovers
//! the impedance angle.
//!
//! [`sim`] runs the whole loop deterministically against a piecewise-
//! constant truth with seeded measurement noise; [`config`] parses strict
//! JSON scenario documents and [`csv`] round-trips record streams byte for
//! byte.

pub mod config;
pub mod csv;
pub mod error;
pub mod esc;
pub mod kalman;
pub mod noise;
pub mod phasor;
pub mod rwls;
pub mod sim;

pub use config::{ConfigDocument, OutputSettings};
pub use csv::{read_records, write_records, CsvError, CSV_HEADER};
pub use error::Error;
pub use esc::{EscConfig, EscState};
pub use kalman::{KalmanConfig, KalmanState};
pub use noise::NoiseChannel;
pub use phasor::{
    node_voltage, normalize_angle, voltage_magnitude_squared, MagSquaredForm, Phasor,
    TheveninParams,
};
pub use rwls::{LsqState, RwlsConfig};
pub use sim::{
    run_scenario, summarize, EstimatorSet, SampleRecord, Scenario, Segment, SegmentSummary,
    SignalSummary, SummaryBands, SummaryMetrics, DEFAULT_SAMPLE_DT, SETTLE_DWELL_S,
};
