//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here is tuned for speed. Each routine follows the defining formula
//! as literally as possible so that agreement with the production code is
//! meaningful.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::afdm::AfdmConfig;
use crate::channel::ChannelRealization;
use crate::linalg::{cis, CMatrix, ZERO};

/// `s_n = N^{-1/2} Σ_m x_m exp(j2π(c1 n² + m n / N + c2 m²))`, evaluated as a double sum.
pub fn idaft_direct(x: &[Complex64], cfg: &AfdmConfig) -> Vec<Complex64> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|t| {
            let mut acc = ZERO;
            for (m, xm) in x.iter().enumerate() {
                let (tf, mf) = (t as f64, m as f64);
                let phase = cfg.c1 * tf * tf + mf * tf / n as f64 + cfg.c2 * mf * mf;
                acc += xm * cis(2.0 * PI * phase);
            }
            acc * scale
        })
        .collect()
}

/// Adjoint of [`idaft_direct`].
pub fn daft_direct(r: &[Complex64], cfg: &AfdmConfig) -> Vec<Complex64> {
    let n = r.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|m| {
            let mut acc = ZERO;
            for (t, rt) in r.iter().enumerate() {
                let (tf, mf) = (t as f64, m as f64);
                let phase = cfg.c1 * tf * tf + mf * tf / n as f64 + cfg.c2 * mf * mf;
                acc += rt * cis(-2.0 * PI * phase);
            }
            acc * scale
        })
        .collect()
}

/// Effective AF-domain matrix obtained by pushing every unit vector through
/// the literal modulator, prefix, tapped-delay line and demodulator.
pub fn pipeline_channel_matrix(ch: &ChannelRealization, cfg: &AfdmConfig) -> CMatrix {
    let n = cfg.n_subcarriers;
    let mut h = CMatrix::zeros(n, n);
    for col in 0..n {
        let mut x = vec![ZERO; n];
        x[col] = Complex64::new(1.0, 0.0);
        let s = idaft_direct(&x, cfg);
        // prefixed sample at time index t in -L_c..N
        let sample = |t: i64| -> Complex64 {
            if t >= 0 {
                s[t as usize]
            } else {
                let k = (n as i64 + t) as usize;
                let tf = t as f64;
                s[k] * cis(-2.0 * PI * cfg.c1 * ((n * n) as f64 + 2.0 * n as f64 * tf))
            }
        };
        let r: Vec<Complex64> = (0..n as i64)
            .map(|t| {
                ch.taps.iter().fold(ZERO, |acc, tap| {
                    acc + tap.gain * sample(t - tap.delay as i64) * cis(-2.0 * PI * tap.doppler * t as f64 / n as f64)
                })
            })
            .collect();
        let y = daft_direct(&r, cfg);
        for (row, v) in y.into_iter().enumerate() {
            h[(row, col)] = v;
        }
    }
    h
}

/// Lawson-Hanson non-negative least squares: `min ‖E u − f‖` subject to `u ⪰ 0`.
pub fn nnls(e: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    let (rows, cols) = e.shape();
    assert_eq!(rows, f.len());
    let f = nalgebra::DVector::from_column_slice(f);
    let mut u = nalgebra::DVector::<f64>::zeros(cols);
    let mut passive = vec![false; cols];
    let tol = 1e-12 * e.norm().max(1.0) * f.norm().max(1.0);

    let solve_passive = |passive: &[bool]| -> nalgebra::DVector<f64> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(rows, idx.len(), |r, c| e[(r, idx[c])]);
        let z = sub
            .svd(true, true)
            .solve(&f, 1e-14)
            .expect("SVD with both factors always solves");
        let mut full = nalgebra::DVector::zeros(cols);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = z[k];
        }
        full
    };

    for _outer in 0..(3 * cols + 10) {
        let w = e.transpose() * (&f - e * &u);
        let candidate = (0..cols)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..cols).filter(|&k| passive[k]).all(|k| z[k] > 0.0) {
                u = z;
                break;
            }
            let mut step = 1.0f64;
            for k in (0..cols).filter(|&k| passive[k] && z[k] <= 0.0) {
                step = step.min(u[k] / (u[k] - z[k]));
            }
            u += (z - &u) * step;
            for k in 0..cols {
                if passive[k] && u[k] <= 1e-15 {
                    passive[k] = false;
                    u[k] = 0.0;
                }
            }
        }
    }
    u.iter().copied().collect()
}

/// Least-distance program `min ‖w‖` subject to `G w ⪰ h`, via the NNLS dual.
/// `None` when the constraints are infeasible.
pub fn least_distance(g: &DMatrix<f64>, h: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = g.shape();
    let mut e = DMatrix::zeros(n + 1, m);
    for k in 0..m {
        for j in 0..n {
            e[(j, k)] = g[(k, j)];
        }
        e[(n, k)] = h[k];
    }
    let mut f = vec![0.0; n + 1];
    f[n] = 1.0;
    let u = nnls(&e, &f);
    let u = nalgebra::DVector::from_vec(u);
    let r = &e * &u - nalgebra::DVector::from_vec(f);
    if r.norm() < 1e-12 || r[n].abs() < 1e-14 {
        return None;
    }
    Some((0..n).map(|j| -r[j] / r[n]).collect())
}

/// Whether some `w` with `‖w‖² ≤ P_m` satisfies `T w ⪰ t 1`.
pub fn socp_feasible(t_mat: &DMatrix<f64>, t: f64, power: f64) -> bool {
    let h = vec![t; t_mat.nrows()];
    match least_distance(t_mat, &h) {
        Some(w) => w.iter().map(|v| v * v).sum::<f64>() <= power,
        None => false,
    }
}

/// Optimal margin of `max t s.t. T w ⪰ t 1, ‖w‖² ≤ P_m`, found by bisection on `t`
/// with a least-distance feasibility test at every step.
pub fn socp_margin(t_mat: &DMatrix<f64>, power: f64, rel_tol: f64) -> f64 {
    // any feasible w gives t ≥ min(T w); the row norms bound t from above
    let hi_bound = t_mat.row_iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min) * power.sqrt();
    let (mut lo, mut hi) = (0.0f64, hi_bound.max(1e-300));
    if !socp_feasible(t_mat, hi * 1e-12, power) {
        // a non-positive optimum: search downward instead
        lo = -hi_bound.max(1.0) * 1e3;
        hi = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || socp_feasible(t_mat, mid, power) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Plain projected gradient on the simplex with a fixed `1/L` step, run for a
/// fixed number of iterations. Returns `δ` and `‖T^T δ‖²`.
pub fn simplex_qp_reference(t_mat: &DMatrix<f64>, iterations: usize) -> (Vec<f64>, f64) {
    let g = t_mat * t_mat.transpose();
    let m = g.nrows();
    let l = 2.0 * g.symmetric_eigenvalues().max();
    let mut d = nalgebra::DVector::from_element(m, 1.0 / m as f64);
    for _ in 0..iterations {
        let grad = &g * &d * 2.0;
        let step: Vec<f64> = (&d - grad / l).iter().copied().collect();
        d = nalgebra::DVector::from_vec(crate::slp::project_simplex(&step));
    }
    let obj = (t_mat.transpose() * &d).norm_squared();
    (d.iter().copied().collect(), obj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nnls_matches_unconstrained_when_interior() {
        let e = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let u = nnls(&e, &[1.0, 2.0, 3.0]);
        assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] - 2.0).abs() < 1e-12);
        let u = nnls(&e, &[-1.0, 2.0, 1.0]);
        assert_eq!(u[0], 0.0);
        assert!(u[1] > 0.0);
    }

    #[test]
    fn least_distance_single_halfspace() {
        // min ‖w‖ s.t. w0 + w1 ≥ 2  ->  w = (1, 1)
        let g = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let w = least_distance(&g, &[2.0]).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
        // w0 ≥ 1 and -w0 ≥ 1 is empty
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert!(least_distance(&g, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn socp_identity_margin() {
        let t = DMatrix::<f64>::identity(4, 4);
        // w = 1/2 per entry under ‖w‖² = 1
        assert!((socp_margin(&t, 1.0, 1e-12) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn reference_qp_on_identity() {
        let (d, obj) = simplex_qp_reference(&DMatrix::identity(2, 2), 200);
        assert!((d[0] - 0.5).abs() < 1e-12 && (obj - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pipeline_matrix_is_unitary_for_single_tap() {
        let cfg = AfdmConfig::for_channel(16, 0.4, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tap = crate::channel::PathTap::unit(rng.random_range(0..=2), 0.3);
        let h = pipeline_channel_matrix(&ChannelRealization::new(vec![tap]).unwrap(), &cfg);
        let gram = h.adjoint() * &h;
        assert!(crate::linalg::max_abs_diff(&gram, &crate::linalg::identity(16)) < 1e-10);
    }
}
