use afdm_slp::afdm::psk_point;
use afdm_slp::afdm::{AfdmConfig, Modem};
use afdm_slp::channel::{effective_channel, ChannelRealization, PathTap};
use afdm_slp::linalg::{norm_sq, CMatrix, RMatrix};
use afdm_slp::sim::{nmse_ratio, trial_rng};
use afdm_slp::slp::{build_precode_problem, ci_margin, project_simplex, slp_precode, QpOptions};
use afdm_slp::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(seed: u64, n: usize) -> CMatrix {
    let mut rng = trial_rng(seed, 0, 0);
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

fn symbols(seed: u64, n: usize, q: usize) -> Vec<Complex64> {
    let mut rng = trial_rng(seed, 0, 1);
    (0..n).map(|_| psk_point(rng.random_range(0..q), q)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_projection_is_feasible(v in prop::collection::vec(-50.0f64..50.0, 1..40)) {
        let d = project_simplex(&v);
        prop_assert!(d.iter().all(|&x| x >= 0.0));
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 1..20)) {
        let once = project_simplex(&v);
        let twice = project_simplex(&once);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_preserves_energy(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32, 64])) {
        let modem = Modem::new(AfdmConfig::new(n, 3.0 / (2.0 * n as f64), 0.1, 2, 4).unwrap());
        let mut rng = trial_rng(seed, 0, 0);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let s = modem.idaft(&x).unwrap();
        prop_assert!((norm_sq(&s) - norm_sq(&x)).abs() < 1e-9 * norm_sq(&x));
    }

    #[test]
    fn precoder_meets_power_and_margin(seed in any::<u64>(), q in prop::sample::select(vec![4usize, 8]), power in 0.5f64..20.0) {
        let n = 6;
        let h = gaussian_matrix(seed, n);
        let s = symbols(seed, n, q);
        let sol = slp_precode(&h, &s, q, power, &QpOptions::default()).unwrap();
        prop_assert!((norm_sq(&sol.x) - power).abs() <= 1e-8 * power);
        let phi = std::f64::consts::PI / q as f64;
        let rows: Vec<Vec<Complex64>> = h.row_iter().map(|r| r.iter().copied().collect()).collect();
        let worst = rows.iter().zip(&s).map(|(r, &sn)| ci_margin(r, &sol.x, sn, phi)).fold(f64::INFINITY, f64::min);
        prop_assert!(worst >= sol.margin - 1e-6 * sol.margin.abs().max(1.0));
    }

    #[test]
    fn margin_scales_with_amplitude(seed in any::<u64>(), scale in 0.2f64..5.0) {
        let n = 5;
        let h = gaussian_matrix(seed, n);
        let s = symbols(seed, n, 4);
        let base = slp_precode(&h, &s, 4, 1.0, &QpOptions::default()).unwrap();
        let scaled = slp_precode(&h, &s, 4, scale * scale, &QpOptions::default()).unwrap();
        prop_assert!((scaled.margin - scale * base.margin).abs() < 1e-6 * scale.max(1.0));
    }

    #[test]
    fn stacked_rows_reproduce_margin(seed in any::<u64>()) {
        let n = 4;
        let h = gaussian_matrix(seed, n);
        let s = symbols(seed, n, 8);
        let prob = build_precode_problem(&h, &s, 8, 1.0).unwrap();
        let mut rng = trial_rng(seed, 1, 0);
        let w: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(w[i], w[n + i])).collect();
        let tw = &prob.t_matrix * RMatrix::from_column_slice(2 * n, 1, &w);
        let rows: Vec<Vec<Complex64>> = h.row_iter().map(|r| r.iter().copied().collect()).collect();
        for i in 0..n {
            let m = ci_margin(&rows[i], &x, s[i], prob.phi_angle);
            prop_assert!((tw[i].min(tw[n + i]) - m).abs() < 1e-9 * (1.0 + m.abs()));
        }
    }

    #[test]
    fn nmse_is_scale_free(seed in any::<u64>(), gain in 0.01f64..100.0, err in 0.0f64..2.0) {
        let h = gaussian_matrix(seed, 6);
        let e = gaussian_matrix(seed ^ 1, 6);
        let est = &h + &e * Complex64::new(err, 0.0);
        let g = Complex64::new(gain, 0.0);
        let a = nmse_ratio(&est, &h).unwrap();
        let b = nmse_ratio(&(est * g), &(h * g)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
    }

    #[test]
    fn channel_is_linear_in_gains(seed in any::<u64>(), k in -3.0f64..3.0) {
        let cfg = AfdmConfig::new(16, 7.0 / 32.0, 0.0, 2, 4).unwrap();
        let mut rng = trial_rng(seed, 0, 0);
        let taps: Vec<PathTap> = (0..3)
            .map(|_| PathTap::new(
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
                rng.random_range(0..=2),
                rng.random_range(-3.0..=3.0),
            ))
            .collect();
        let ch = ChannelRealization::new(taps.clone()).unwrap();
        let scaled = ChannelRealization::new(
            taps.iter().map(|t| PathTap::new(t.gain * k, t.delay, t.doppler)).collect(),
        ).unwrap();
        let diff = effective_channel(&scaled, &cfg) - effective_channel(&ch, &cfg) * Complex64::new(k, 0.0);
        prop_assert!(diff.norm() < 1e-10 * (1.0 + effective_channel(&ch, &cfg).norm()));
    }
}
