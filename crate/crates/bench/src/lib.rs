//! Shared fixtures for the pipeline benchmarks.

use thevenin_core::{Scenario, Segment};

/// A short single-dwell scenario with measurement noise, sized so one run
/// stays in the microsecond-to-millisecond range.
pub fn short_scenario(duration: f64) -> Scenario {
    let mut s = Scenario::new(vec![Segment {
        t_start: 0.0,
        t_end: duration,
        vth: 245.0,
        zth: 1.42,
        alpha: 35.3_f64.to_radians(),
    }]);
    s.noise_sigma = 0.5;
    s.seed = 42;
    s
}
