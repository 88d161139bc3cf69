//! Dense complex linear-algebra helpers shared by the estimators and precoders.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `exp(j * theta)`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `exp(-j 2 pi c k^2)` with the quadratic phase reduced modulo one turn first.
#[inline]
pub fn chirp(c: f64, k: usize) -> Complex64 {
    let k2 = (k as f64) * (k as f64);
    cis(-2.0 * std::f64::consts::PI * (c * k2).rem_euclid(1.0))
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(m: CMatrix, what: &str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn hpd_inverse(m: &CMatrix, what: &str) -> Result<CMatrix> {
    Ok(cholesky(m.clone(), what)?.inverse())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, Complex64::new(s, 0.0))
}

/// Number of entries whose magnitude exceeds `tol`, per row and per column.
pub fn support_counts(m: &CMatrix, tol: f64) -> (Vec<usize>, Vec<usize>) {
    let mut rows = vec![0; m.nrows()];
    let mut cols = vec![0; m.ncols()];
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if m[(r, c)].norm() > tol {
                rows[r] += 1;
                cols[c] += 1;
            }
        }
    }
    (rows, cols)
}
