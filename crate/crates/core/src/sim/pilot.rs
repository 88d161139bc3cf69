use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::linalg::cis;

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zadoff-Chu sequence: `exp(−jπ r k²/n)` for even `n`, `exp(−jπ r k(k+1)/n)` for odd `n`.
pub fn zc_pilot(n: usize, root: usize) -> Result<Vec<Complex64>> {
    if n < 2 || root == 0 || root >= n || gcd(root, n) != 1 {
        return Err(domain(format!("ZC root {root} must be in 1..{n} and coprime to {n}")));
    }
    let odd = n % 2;
    Ok((0..n)
        .map(|k| {
            // reduce r k (k + odd) modulo 2n before scaling to keep the phase exact
            let e = (root as u128 * k as u128 * (k + odd) as u128) % (2 * n) as u128;
            cis(-std::f64::consts::PI * e as f64 / n as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_modulus_and_known_samples() {
        let p = zc_pilot(64, 1).unwrap();
        assert!(p.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert!((p[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p[8] + Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn ideal_cyclic_autocorrelation() {
        for (n, r) in [(64, 1), (64, 5), (63, 2)] {
            let p = zc_pilot(n, r).unwrap();
            for lag in 1..n {
                let c: Complex64 = (0..n).map(|k| p[k] * p[(k + lag) % n].conj()).sum();
                assert!(c.norm() < 1e-10, "n={n} r={r} lag={lag}: {}", c.norm());
            }
        }
    }

    #[test]
    fn rejects_bad_roots() {
        assert!(zc_pilot(64, 2).is_err());
        assert!(zc_pilot(64, 0).is_err());
        assert!(zc_pilot(64, 64).is_err());
    }
}
