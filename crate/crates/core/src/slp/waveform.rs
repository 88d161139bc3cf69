use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg::{CMatrix, CVector, RMatrix, RVector};

use super::{build_precode_problem, solve_dual_qp, QpOptions};

/// Closed-form primal point for a dual vector.
#[derive(Debug, Clone)]
pub struct Waveform {
    pub w: RVector,
    pub x: Vec<Complex64>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct PrecodeSolution {
    pub x: Vec<Complex64>,
    pub w: RVector,
    pub delta: RVector,
    /// Worst-case constructive-interference margin `t`.
    pub margin: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// `(T, δ, w, t)` for one precoded symbol vector, as a JSON fixture.
#[derive(Debug, Clone, Serialize)]
pub struct PrecodeDiagnostic {
    pub t_matrix: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
}

impl PrecodeDiagnostic {
    pub fn new(t_matrix: &RMatrix, sol: &PrecodeSolution) -> Self {
        Self {
            t_matrix: t_matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
            delta: sol.delta.iter().copied().collect(),
            w: sol.w.iter().copied().collect(),
            t: sol.margin,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric record serializes")
    }
}

/// `w = √P_m T^T δ / ‖T^T δ‖`, `t = √P_m ‖T^T δ‖`, `x = w[..N] + j w[N..]`.
pub fn recover_waveform(delta: &RVector, t_mat: &RMatrix, power: f64) -> Result<Waveform> {
    if delta.len() != t_mat.nrows() {
        return Err(crate::error::shape("dual vector length does not match T"));
    }
    let v = t_mat.transpose() * delta;
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(Error::Infeasible(
            "T^T δ vanishes; no constructive direction exists".into(),
        ));
    }
    let root = power.sqrt();
    let w = v * (root / norm);
    let n = w.len() / 2;
    let x = (0..n).map(|i| Complex64::new(w[i], w[n + i])).collect();
    Ok(Waveform { w, x, t: root * norm })
}

/// Builds the stacked problem, solves the simplex dual and recovers the waveform.
pub fn slp_precode(h: &CMatrix, s: &[Complex64], q: usize, power: f64, opts: &QpOptions) -> Result<PrecodeSolution> {
    let problem = build_precode_problem(h, s, q, power)?;
    let qp = solve_dual_qp(&problem.t_matrix, opts)?;
    let wave = recover_waveform(&qp.delta, &problem.t_matrix, power)?;
    Ok(PrecodeSolution {
        x: wave.x,
        w: wave.w,
        delta: qp.delta,
        margin: wave.t,
        converged: qp.converged,
        iterations: qp.iterations,
    })
}

/// Regularized channel inversion `x = γ H^H (H H^H + σ² I)^{-1} s`, scaled to `‖x‖² = P_m`.
pub fn mmse_precode(h: &CMatrix, s: &[Complex64], power: f64, noise_var: f64) -> Result<Vec<Complex64>> {
    let n = s.len();
    if h.nrows() != n || h.ncols() != n {
        return Err(crate::error::shape(format!("channel must be {n}x{n}")));
    }
    if !(noise_var >= 0.0) {
        return Err(domain("noise variance must be non-negative"));
    }
    let gram = h * h.adjoint() + CMatrix::from_diagonal_element(n, n, noise_var.into());
    let z = gram
        .lu()
        .solve(&CVector::from_column_slice(s))
        .ok_or_else(|| Error::Numerical("singular MMSE precoder".into()))?;
    let x = h.adjoint() * z;
    let norm = x.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numerical("degenerate MMSE precoder output".into()));
    }
    Ok((x * Complex64::new(power.sqrt() / norm, 0.0)).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afdm::{psk_decide, psk_point};
    use crate::linalg::identity;
    use crate::slp::ci_margin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_channel(rng: &mut impl Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn identity_channel_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in [4usize, 8] {
            let n = 8;
            let s: Vec<Complex64> = (0..n).map(|_| psk_point(rng.random_range(0..q), q)).collect();
            let sol = slp_precode(&identity(n), &s, q, n as f64, &QpOptions::default()).unwrap();
            assert!(
                (sol.margin - (PI / q as f64).sin()).abs() < 1e-6,
                "q={q}: {}",
                sol.margin
            );
            for (x, sym) in sol.x.iter().zip(&s) {
                assert!((x - sym).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn power_and_margin_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = 6;
            let h = random_channel(&mut rng, n);
            let s: Vec<Complex64> = (0..n).map(|_| psk_point(rng.random_range(0..4), 4)).collect();
            let sol = slp_precode(&h, &s, 4, 2.5, &QpOptions::default()).unwrap();
            let p: f64 = sol.x.iter().map(|v| v.norm_sqr()).sum();
            assert!((p - 2.5).abs() < 1e-8 * 2.5);
            let prob = build_precode_problem(&h, &s, 4, 2.5).unwrap();
            let tw = &prob.t_matrix * &sol.w;
            assert!((tw.min() - sol.margin).abs() <= 1e-4 * sol.margin);
            // noise-free reception decodes correctly
            let y = &h * CVector::from_vec(sol.x.clone());
            for (r, sym) in s.iter().enumerate() {
                let row: Vec<Complex64> = h.row(r).iter().copied().collect();
                assert!(ci_margin(&row, &sol.x, *sym, PI / 4.0) > 0.0);
                assert_eq!(psk_point(psk_decide(y[r], 4), 4), *sym);
            }
        }
    }

    #[test]
    fn scaling_power_by_four_doubles_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_channel(&mut rng, 5);
        let s: Vec<Complex64> = (0..5).map(|_| psk_point(rng.random_range(0..8), 8)).collect();
        let a = slp_precode(&h, &s, 8, 1.0, &QpOptions::default()).unwrap();
        let b = slp_precode(&h, &s, 8, 4.0, &QpOptions::default()).unwrap();
        assert_eq!(a.delta, b.delta);
        assert!((b.margin - 2.0 * a.margin).abs() < 1e-12 * b.margin);
        for (x, y) in a.x.iter().zip(&b.x) {
            assert!((x * 2.0 - y).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_channel_is_infeasible() {
        let s = vec![psk_point(0, 4); 3];
        let err = slp_precode(&CMatrix::zeros(3, 3), &s, 4, 1.0, &QpOptions::default());
        assert!(matches!(err, Err(Error::Infeasible(_))));
    }

    #[test]
    fn mmse_precoder_cases() {
        let s: Vec<Complex64> = (0..4).map(|k| psk_point(k, 4)).collect();
        let x = mmse_precode(&identity(4), &s, 4.0, 0.0).unwrap();
        for (a, b) in x.iter().zip(&s) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_channel(&mut rng, 4);
        let x = mmse_precode(&h, &s, 3.0, 0.1).unwrap();
        assert!((x.iter().map(|v| v.norm_sqr()).sum::<f64>() - 3.0).abs() < 1e-12);
        // unitary channel, σ² → 0: received symbols are a positive multiple of s
        let u = crate::channel::dft_matrix(4);
        let x = mmse_precode(&u, &s, 2.0, 1e-14).unwrap();
        let y = &u * CVector::from_vec(x);
        let ratio = y[0] / s[0];
        assert!(ratio.re > 0.0);
        for k in 0..4 {
            assert!((y[k] / s[k] - ratio).norm() < 1e-10);
        }
    }

    #[test]
    fn diagnostic_record_fields() {
        let s = vec![psk_point(1, 4); 2];
        let sol = slp_precode(&identity(2), &s, 4, 2.0, &QpOptions::default()).unwrap();
        let prob = build_precode_problem(&identity(2), &s, 4, 2.0).unwrap();
        let js = PrecodeDiagnostic::new(&prob.t_matrix, &sol).to_json();
        let v: serde_json::Value = serde_json::from_str(&js).unwrap();
        for key in ["t_matrix", "delta", "w", "t"] {
            assert!(v.get(key).is_some());
        }
    }
}
