//! Closed-loop integration properties: convergence basin and residual
//! ripple of the angle loop, excitation and fidelity of the probe
//! schedule, exactness without noise, innovation whiteness, and
//! re-convergence after the parameter step.

use nalgebra::{Matrix2, Vector2};

use thevenin_core::{
    run_scenario, summarize, ConfigDocument, EstimatorSet, KalmanState, Scenario, Segment,
    SummaryBands,
};

fn bundled_config() -> ConfigDocument {
    let path = format!(
        "{}/../../scenarios/paper_scenario.json",
        env!("CARGO_MANIFEST_DIR")
    );
    ConfigDocument::from_json_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Noise-free single-dwell scenario matching the first bundled segment.
fn first_dwell_noiseless() -> Scenario {
    let mut s = Scenario::new(vec![Segment {
        t_start: 0.0,
        t_end: 105.0,
        vth: 245.0,
        zth: 1.42,
        alpha: 35.3_f64.to_radians(),
    }]);
    s.noise_sigma = 0.0;
    s
}

#[test]
fn angle_loop_converges_from_sixty_degrees_either_side() {
    let alpha_deg = 35.3_f64;
    let theta_star = -alpha_deg.to_radians();
    let ripple_bound_deg = 0.15_f64.to_degrees(); // dither amplitude
    for offset_deg in [-60.0, -25.0, 25.0, 60.0] {
        let mut s = first_dwell_noiseless();
        s.estimators = EstimatorSet {
            esc: true,
            rwls: false,
            kalman: false,
        };
        s.esc.theta0 = theta_star + f64::to_radians(offset_deg);
        let records = run_scenario(&s).unwrap();
        // sustained convergence: every sample of the final 20 s inside the
        // dither-amplitude band around the optimum
        for r in records.iter().filter(|r| r.t >= 85.0) {
            let err = (r.alpha_hat_deg.unwrap() - alpha_deg).abs();
            assert!(
                err < ripple_bound_deg,
                "offset {offset_deg} deg: |alpha error| = {err:.3} deg at t = {}",
                r.t
            );
        }
    }
}

#[test]
fn settled_angle_ripple_stays_below_the_dither_amplitude() {
    let mut s = first_dwell_noiseless();
    s.estimators = EstimatorSet {
        esc: true,
        rwls: false,
        kalman: false,
    };
    let records = run_scenario(&s).unwrap();
    let tail: Vec<f64> = records
        .iter()
        .filter(|r| r.t >= 85.0)
        .map(|r| -r.alpha_hat_deg.unwrap().to_radians())
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let excursion = tail.iter().map(|t| (t - mean).abs()).fold(0.0, f64::max);
    assert!(
        excursion <= s.esc.dither_amplitude,
        "theta_hat excursion {excursion:.4} rad exceeds the dither amplitude {}",
        s.esc.dither_amplitude
    );
}

#[test]
fn every_sub_period_window_shows_magnitude_excitation() {
    let mut s = first_dwell_noiseless();
    s.duration = 10.0;
    let records = run_scenario(&s).unwrap();
    // 2/w2 seconds of samples: about a third of one dither period
    let window = (2.0 / s.mag_dither_freq / s.sample_dt).ceil() as usize;
    assert!(window >= 2);
    for chunk in records.windows(window) {
        let lo = chunk.iter().map(|r| r.ij).fold(f64::MAX, f64::min);
        let hi = chunk.iter().map(|r| r.ij).fold(f64::MIN, f64::max);
        assert!(
            hi > lo,
            "injection magnitude constant over [{}, {}] s",
            chunk[0].t,
            chunk[chunk.len() - 1].t
        );
    }
}

#[test]
fn truth_columns_reproduce_the_schedule_exactly_at_every_step() {
    let doc = bundled_config();
    let records = run_scenario(&doc.scenario).unwrap();
    for r in &records {
        let seg = doc
            .scenario
            .segments
            .iter()
            .find(|s| r.t >= s.t_start && r.t < s.t_end)
            .expect("every sample falls in a segment");
        assert_eq!(r.vth_true, seg.vth);
        assert_eq!(r.zth_true, seg.zth);
        assert_eq!(r.alpha_true_deg, seg.alpha.to_degrees());
    }
}

#[test]
fn noiseless_run_with_frozen_probe_angle_recovers_parameters_to_1e3_relative() {
    // With the angle held at the peak and no dither on it, the voltage
    // law is exactly affine in the injection magnitude, so a
    // never-forgetting fit reproduces the parameters to float accuracy.
    let mut s = first_dwell_noiseless();
    s.duration = 60.0;
    s.segments[0].t_end = 60.0;
    s.estimators.esc = false;
    s.esc.theta0 = -s.segments[0].alpha;
    s.rwls.forgetting = 1.0;
    let records = run_scenario(&s).unwrap();
    let last = records.last().unwrap();
    let z_rel = (last.zth_rwls.unwrap() - 1.42).abs() / 1.42;
    let v_rel = (last.vth_rwls.unwrap() - 245.0).abs() / 245.0;
    assert!(z_rel < 1e-3, "z relative error {z_rel:.2e}");
    assert!(v_rel < 1e-3, "v relative error {v_rel:.2e}");
    // the recovery is much tighter than the headline bound (residual bias
    // comes only from the finite initial covariance pulling toward the
    // zero prior); pin a stronger floor so regressions surface early
    assert!(z_rel < 1e-5 && v_rel < 1e-5, "z {z_rel:.2e}, v {v_rel:.2e}");
}

#[test]
fn kalman_innovations_are_white_at_steady_state() {
    // Stationary first dwell with the measurement-noise variance matching
    // the filter's R: the prediction residuals should carry no serial
    // structure once converged.
    let mut s = first_dwell_noiseless();
    s.noise_sigma = 0.5; // R = 0.25 = sigma^2
    s.seed = 5;
    let records = run_scenario(&s).unwrap();

    let cfg = s.kalman;
    let mut state = KalmanState::new(&cfg);
    let (b, u) = (Matrix2::zeros(), Vector2::zeros());
    let mut innovations = Vec::with_capacity(records.len());
    for r in &records {
        let predicted = state.predict(&cfg, &b, &u);
        let h = Vector2::new(1.0, r.ij);
        innovations.push(r.v_meas - h.dot(&predicted.x));
        state = predicted.update(&cfg, h, r.v_meas).unwrap();
    }

    let tail = &innovations[innovations.len() - 2000..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let centered: Vec<f64> = tail.iter().map(|e| e - mean).collect();
    let var: f64 = centered.iter().map(|e| e * e).sum();
    let lag1: f64 = centered.windows(2).map(|w| w[0] * w[1]).sum();
    let autocorr = lag1 / var;
    assert!(
        autocorr.abs() < 0.1,
        "lag-1 innovation autocorrelation = {autocorr:.3}"
    );
}

#[test]
fn both_magnitude_estimators_resettle_within_forty_seconds_of_the_step() {
    let doc = bundled_config();
    let records = run_scenario(&doc.scenario).unwrap();
    let summary = summarize(&records, 25.0, &SummaryBands::default()).unwrap();
    let seg2 = &summary.segments[1];
    for (label, signal) in [("rwls", &seg2.zth_rwls), ("kf", &seg2.zth_kf)] {
        let settle = signal
            .as_ref()
            .and_then(|s| s.settling_time_s)
            .map(|t| t - seg2.t_start);
        assert!(
            settle.is_some_and(|t| t <= 40.0),
            "{label} impedance settle after step: {settle:?} s"
        );
    }
}
