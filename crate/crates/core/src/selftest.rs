//! Fast cross-checks of production paths against the slow references in
//! [`crate::oracle`]. Used by the `selftest` CLI subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::afdm::{psk_point, AfdmConfig, Modem};
use crate::channel::{effective_channel, path_matrix_exact, ChannelModel};
use crate::linalg::{identity, max_abs_diff, max_abs_diff_vec, scaled_identity, CMatrix, RMatrix};
use crate::oracle;
use crate::sbl::bcrlb;
use crate::sim::zc_pilot;
use crate::slp::{slp_precode, solve_dual_qp, QpOptions};

#[derive(Debug, Clone)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, limit: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: worst.is_finite() && worst <= limit,
        detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

pub fn run_selftest(seed: u64) -> Vec<SelfCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let cfg = AfdmConfig::for_channel(64, 0.154_320_987_654, 2, 4).expect("table defaults are valid");
    let modem = Modem::new(cfg);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x = random_vec(&mut rng, 64);
        worst = worst.max(max_abs_diff_vec(
            &modem.idaft(&x).unwrap(),
            &oracle::idaft_direct(&x, &cfg),
        ));
        worst = worst.max(max_abs_diff_vec(
            &modem.daft(&x).unwrap(),
            &oracle::daft_direct(&x, &cfg),
        ));
        let back = modem.daft(&modem.idaft(&x).unwrap()).unwrap();
        worst = worst.max(max_abs_diff_vec(&back, &x));
    }
    out.push(check("transforms vs direct sums", worst, 1e-10));

    let model = ChannelModel {
        paths: 3,
        l_max: 2,
        alpha_max: 0.154_320_987_654,
        fractional: true,
        distinct: false,
    };
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let ch = model.sample(&mut rng).unwrap();
        let fast = effective_channel(&ch, &cfg);
        let product = ch.taps.iter().fold(CMatrix::zeros(64, 64), |acc, t| {
            acc + path_matrix_exact(t, &cfg) * t.gain
        });
        let pipeline = oracle::pipeline_channel_matrix(&ch, &cfg);
        let scale = fast.norm();
        worst = worst.max(max_abs_diff(&fast, &product) / scale);
        worst = worst.max(max_abs_diff(&fast, &pipeline) / scale);
    }
    out.push(check("channel matrix vs factorized and pipeline", worst, 1e-9));

    let mut worst = 0.0f64;
    for _ in 0..5 {
        let t = RMatrix::from_fn(16, 16, |_, _| rng.random::<f64>() - 0.5);
        let qp = solve_dual_qp(&t, &QpOptions::default()).unwrap();
        let dual_t = qp.objective.sqrt();
        let primal_t = oracle::socp_margin(&t, 1.0, 1e-10);
        worst = worst.max((dual_t - primal_t).abs() / primal_t.abs().max(1e-300));
    }
    out.push(check("dual QP vs bisection SOCP", worst, 1e-4));

    let mut worst = 0.0f64;
    for q in [4usize, 8] {
        let s: Vec<Complex64> = (0..16).map(|_| psk_point(rng.random_range(0..q), q)).collect();
        let sol = slp_precode(&identity(16), &s, q, 16.0, &QpOptions::default()).unwrap();
        worst = worst.max((sol.margin - (std::f64::consts::PI / q as f64).sin()).abs());
    }
    out.push(check("identity-channel margin sin(pi/Q)", worst, 1e-6));

    let s2 = 0.25;
    let b = bcrlb(&identity(8), &identity(8), &scaled_identity(8, s2)).unwrap_or(f64::NAN);
    out.push(check(
        "bound closed form N s2/(1+s2)",
        (b - 8.0 * s2 / (1.0 + s2)).abs(),
        1e-12,
    ));

    let p = zc_pilot(64, 1).unwrap();
    let worst = (1..64)
        .map(|lag| {
            (0..64)
                .map(|k| p[k] * p[(k + lag) % 64].conj())
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max);
    out.push(check("pilot cyclic autocorrelation", worst, 1e-10));
    out
}
