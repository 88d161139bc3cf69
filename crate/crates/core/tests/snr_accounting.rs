use afdm_slp::sim::{run_uplink_sweep, ExperimentConfig};

#[test]
fn injected_noise_matches_nominal_snr() {
    let mut cfg = ExperimentConfig {
        trials: 40,
        ..ExperimentConfig::default()
    };
    cfg.sweep.snr_db = vec![0.0, 15.0, 30.0];
    cfg.estimator.omp = false;
    cfg.estimator.mmse_genie = false;
    cfg.estimator.eta = None;
    let report = run_uplink_sweep(&cfg).unwrap();
    for c in &report.snr_checks {
        let rel = (c.measured_noise_var - c.nominal_noise_var).abs() / c.nominal_noise_var;
        assert!(rel < 0.02, "{c:?}");
        // unit-power constant-modulus symbols through a unit-average-gain channel
        assert!((c.measured_signal_power - 1.0).abs() < 0.2, "{c:?}");
    }
}
