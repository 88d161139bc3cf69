use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, shape, Result};
use crate::linalg::{CMatrix, RMatrix};

/// Stacked real form of the constructive-interference design for one symbol vector.
#[derive(Debug, Clone)]
pub struct PrecodeProblem {
    /// `[[A_R, -A_I], [B_R, -B_I]]`, shape `2N × 2N`.
    pub t_matrix: RMatrix,
    pub power_budget: f64,
    pub symbols: Vec<Complex64>,
    /// Half-width of a decision sector, `π/Q`.
    pub phi_angle: f64,
}

impl PrecodeProblem {
    pub fn n(&self) -> usize {
        self.symbols.len()
    }
}

/// `Re(z) sinφ − |Im(z)| cosφ` with `z = h_n x s_n*`: the signed distance-like
/// margin of the received point from the edges of its decision sector.
pub fn ci_margin(h_row: &[Complex64], x: &[Complex64], s_n: Complex64, phi: f64) -> f64 {
    let z: Complex64 = h_row.iter().zip(x).map(|(h, v)| h * v).sum::<Complex64>() * s_n.conj();
    z.re * phi.sin() - z.im.abs() * phi.cos()
}

fn check_unit_modulus(s: &[Complex64]) -> Result<()> {
    match s.iter().position(|v| (v.norm() - 1.0).abs() > 1e-9) {
        Some(i) => Err(domain(format!(
            "target symbol {i} is not unit modulus (|s| = {})",
            s[i].norm()
        ))),
        None => Ok(()),
    }
}

/// Assembles `T` from `A = λ_A diag(s*) H` and `B = λ_B diag(s*) H` with
/// `λ_A = sinφ − j cosφ`, `λ_B = sinφ + j cosφ`, `φ = π/Q`.
pub fn build_precode_problem(h: &CMatrix, s: &[Complex64], q: usize, power: f64) -> Result<PrecodeProblem> {
    let n = s.len();
    if h.nrows() != n || h.ncols() != n {
        return Err(shape(format!("channel must be {n}x{n}, got {:?}", h.shape())));
    }
    if q < 2 {
        return Err(domain("constellation order must be at least 2"));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(domain("power budget must be positive"));
    }
    check_unit_modulus(s)?;
    let phi = PI / q as f64;
    let lambda_a = Complex64::new(phi.sin(), -phi.cos());
    let lambda_b = Complex64::new(phi.sin(), phi.cos());
    let mut t = RMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        let sc = s[r].conj();
        for c in 0..n {
            let a = lambda_a * sc * h[(r, c)];
            let b = lambda_b * sc * h[(r, c)];
            t[(r, c)] = a.re;
            t[(r, n + c)] = -a.im;
            t[(n + r, c)] = b.re;
            t[(n + r, n + c)] = -b.im;
        }
    }
    Ok(PrecodeProblem {
        t_matrix: t,
        power_budget: power,
        symbols: s.to_vec(),
        phi_angle: phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afdm::psk_point;
    use crate::linalg::identity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn margin_examples() {
        let phi = PI / 4.0;
        let one = [Complex64::new(1.0, 0.0)];
        let s = psk_point(0, 4);
        // aligned with the symbol
        let m = ci_margin(&one, &[s * 2.5], s, phi);
        assert!((m - 2.5 * phi.sin()).abs() < 1e-15);
        // on the sector edge
        let edge = s * Complex64::from_polar(1.7, phi);
        assert!(ci_margin(&one, &[edge], s, phi).abs() < 1e-15);
        // z = 1 + 0j
        let m = ci_margin(&one, &[s], s, phi);
        assert!((m - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identity_channel_blocks() {
        let s = vec![Complex64::new(1.0, 0.0); 3];
        let p = build_precode_problem(&identity(3), &s, 4, 3.0).unwrap();
        let r = 0.5f64.sqrt();
        assert_eq!(p.t_matrix.shape(), (6, 6));
        for i in 0..3 {
            assert!((p.t_matrix[(i, i)] - r).abs() < 1e-15);
            assert!((p.t_matrix[(i, 3 + i)] - r).abs() < 1e-15);
            assert!((p.t_matrix[(3 + i, i)] - r).abs() < 1e-15);
            assert!((p.t_matrix[(3 + i, 3 + i)] + r).abs() < 1e-15);
        }
    }

    #[test]
    fn stacked_rows_reproduce_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 6;
        let h = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let s: Vec<Complex64> = (0..n).map(|_| psk_point(rng.random_range(0..8), 8)).collect();
        let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let p = build_precode_problem(&h, &s, 8, 1.0).unwrap();
        let w = stack(&x);
        let tw = &p.t_matrix * w;
        for r in 0..n {
            let row: Vec<Complex64> = h.row(r).iter().copied().collect();
            let expect = ci_margin(&row, &x, s[r], p.phi_angle);
            assert!((tw[r].min(tw[n + r]) - expect).abs() < 1e-12);
        }
    }

    fn stack(x: &[Complex64]) -> crate::linalg::RVector {
        let n = x.len();
        crate::linalg::RVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = identity(2);
        let bad = vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        assert!(build_precode_problem(&h, &bad, 4, 1.0).is_err());
        let good = vec![Complex64::new(1.0, 0.0); 2];
        assert!(build_precode_problem(&identity(3), &good, 4, 1.0).is_err());
        assert!(build_precode_problem(&h, &good, 4, 0.0).is_err());
    }
}
