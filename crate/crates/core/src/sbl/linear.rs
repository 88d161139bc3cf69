//! Linear-Gaussian estimators, the Bayesian CRB, and the MMSE equalizer.

use nalgebra::DVector;

use crate::channel::ChannelRealization;
use crate::error::{shape, Result};
use crate::linalg::{cholesky, CMatrix, CVector};

use super::{Dictionary, PRUNE_FLOOR};

fn check_square(m: &CMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(shape(format!("{what} must be {n}x{n}, got {:?}", m.shape())));
    }
    Ok(())
}

/// Bayesian information `Φ^H R_w^{-1} Φ + R_h^{-1}` and `R_w^{-1} Φ`.
fn information(phi: &CMatrix, r_h: &CMatrix, r_w: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let (n, m) = phi.shape();
    check_square(r_h, m, "R_h")?;
    check_square(r_w, n, "R_w")?;
    let w_inv_phi = cholesky(r_w.clone(), "R_w")?.solve(phi);
    let h_inv = cholesky(r_h.clone(), "R_h")?.inverse();
    Ok((phi.ad_mul(&w_inv_phi) + h_inv, w_inv_phi))
}

/// `h = (Φ^H R_w^{-1} Φ + R_h^{-1})^{-1} Φ^H R_w^{-1} y`.
pub fn mmse_estimate(y: &CVector, phi: &CMatrix, r_h: &CMatrix, r_w: &CMatrix) -> Result<CVector> {
    if y.len() != phi.nrows() {
        return Err(shape("observation length does not match the dictionary"));
    }
    let (info, w_inv_phi) = information(phi, r_h, r_w)?;
    let rhs = w_inv_phi.ad_mul(y);
    Ok(cholesky(info, "Bayesian information")?.solve(&rhs))
}

/// `tr(Φ [Φ^H R_w^{-1} Φ + R_h^{-1}]^{-1} Φ^H)`.
pub fn bcrlb(phi: &CMatrix, r_h: &CMatrix, r_w: &CMatrix) -> Result<f64> {
    let (info, _) = information(phi, r_h, r_w)?;
    let chol = cholesky(info, "Bayesian information")?;
    // tr(Φ J^{-1} Φ^H) = ‖L^{-1} Φ^H‖_F² with J = L L^H
    let mut z = phi.adjoint();
    let l = chol.l();
    if !l.solve_lower_triangular_mut(&mut z) {
        return Err(crate::Error::Numerical("singular Cholesky factor".into()));
    }
    Ok(z.norm_squared())
}

/// Diagonal prior covariance with `count/P` at the atoms nearest the true taps
/// and [`PRUNE_FLOOR`] elsewhere.
pub fn genie_prior(dict: &Dictionary, ch: &ChannelRealization) -> DVector<f64> {
    let p = ch.taps.len() as f64;
    let mut diag = DVector::from_element(dict.len(), 0.0);
    for tap in &ch.taps {
        if let Some(i) = dict.nearest_atom(tap.delay, tap.doppler) {
            diag[i] += 1.0 / p;
        }
    }
    diag.map(|v| if v > 0.0 { v } else { PRUNE_FLOOR })
}

/// `x̂ = (H^H H + σ² I)^{-1} H^H y`.
pub fn mmse_equalize(y: &CVector, h: &CMatrix, noise_var: f64) -> Result<CVector> {
    check_square(h, y.len(), "channel")?;
    let n = h.ncols();
    let gram = h.ad_mul(h) + CMatrix::from_diagonal_element(n, n, noise_var.into());
    let rhs = h.ad_mul(y);
    match nalgebra::Cholesky::new(gram.clone()) {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| crate::Error::Numerical("singular equalizer".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, scaled_identity};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn scalar_wiener() {
        let phi = CMatrix::from_element(1, 1, Complex64::new(0.6, -0.3));
        let y = CVector::from_element(1, Complex64::new(1.1, 0.4));
        let (rh, rw) = (2.0, 0.5);
        let got = mmse_estimate(&y, &phi, &scaled_identity(1, rh), &scaled_identity(1, rw)).unwrap();
        let p = phi[(0, 0)];
        let expect = p.conj() * y[0] * rh / (p.norm_sqr() * rh + rw);
        assert!((got[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn vanishing_prior_precision_inverts_phi() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_matrix(&mut rng, 4, 4) + scaled_identity(4, 2.0);
        let y = CVector::from_fn(4, |i, _| Complex64::new(i as f64, 1.0));
        let got = mmse_estimate(&y, &phi, &scaled_identity(4, 1e12), &identity(4)).unwrap();
        let direct = phi.clone().lu().solve(&y).unwrap();
        assert!((got - direct).norm() < 1e-6);
    }

    #[test]
    fn tight_prior_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = random_matrix(&mut rng, 8, 3);
        let h = CVector::from_fn(3, |i, _| Complex64::new(1.0 + i as f64, -0.5));
        let y = &phi * &h;
        let got = mmse_estimate(&y, &phi, &scaled_identity(3, 1e3), &scaled_identity(8, 1e-10)).unwrap();
        assert!((got - h).norm() < 1e-6);
    }

    #[test]
    fn bcrlb_identity_case() {
        for s2 in [0.01, 0.3, 2.0] {
            let b = bcrlb(&identity(6), &identity(6), &scaled_identity(6, s2)).unwrap();
            assert!((b - 6.0 * s2 / (1.0 + s2)).abs() < 1e-12);
        }
        let tiny = bcrlb(&identity(6), &identity(6), &scaled_identity(6, 1e-14)).unwrap();
        assert!(tiny < 1e-12);
    }

    #[test]
    fn bcrlb_monotone_in_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random_matrix(&mut rng, 10, 5);
        let rh = scaled_identity(5, 0.4);
        let mut last = 0.0;
        for k in 0..20 {
            let s2 = 10f64.powf(-3.0 + 0.25 * k as f64);
            let b = bcrlb(&phi, &rh, &scaled_identity(10, s2)).unwrap();
            assert!(b >= last - 1e-12);
            last = b;
        }
    }

    #[test]
    fn equalizer_cases() {
        let y = CVector::from_fn(4, |i, _| Complex64::new(i as f64, 2.0));
        assert!((mmse_equalize(&y, &identity(4), 0.0).unwrap() - &y).norm() < 1e-14);
        assert!(mmse_equalize(&y, &identity(4), 1e15).unwrap().norm() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_matrix(&mut rng, 4, 4) + scaled_identity(4, 1.0);
        let x = CVector::from_fn(4, |i, _| Complex64::new(1.0, i as f64));
        let est = mmse_equalize(&(&h * &x), &h, 1e-12).unwrap();
        assert!((est - x).norm() < 1e-4);
    }

    #[test]
    fn singular_covariance_is_reported() {
        let phi = identity(2);
        let y = CVector::zeros(2);
        let bad = CMatrix::zeros(2, 2);
        assert!(mmse_estimate(&y, &phi, &bad, &identity(2)).is_err());
        assert!(bcrlb(&phi, &identity(2), &bad).is_err());
    }
}
