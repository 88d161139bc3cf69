use crate::error::{domain, shape, Result};
use crate::linalg::{CMatrix, CVector};

use super::Dictionary;

/// Orthogonal matching pursuit: `k` greedy selections by normalized correlation
/// with the residual, each followed by a least-squares refit on the support.
/// Stops early on an exact fit or a singular support Gram matrix.
pub fn omp_estimate(y: &CVector, dict: &Dictionary, k: usize) -> Result<CVector> {
    let m = dict.len();
    if y.len() != dict.phi.nrows() {
        return Err(shape("observation length does not match the dictionary"));
    }
    if k == 0 || k > m {
        return Err(domain(format!("sparsity {k} must lie in 1..={m}")));
    }
    let norms: Vec<f64> = (0..m).map(|i| dict.gram[(i, i)].re.sqrt()).collect();
    let phi_h_y = dict.phi_h(y);
    let y_norm = y.norm();

    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut coef = CVector::zeros(0);
    let mut residual = y.clone();
    for _ in 0..k {
        if residual.norm() <= 1e-12 * y_norm.max(1e-300) {
            break;
        }
        let corr = dict.phi.ad_mul(&residual);
        let pick = (0..m)
            .filter(|i| !support.contains(i) && norms[*i] > 0.0)
            .max_by(|&a, &b| {
                (corr[a].norm() / norms[a])
                    .partial_cmp(&(corr[b].norm() / norms[b]))
                    .unwrap()
            });
        let Some(pick) = pick else { break };
        support.push(pick);
        let s = support.len();
        let gram = CMatrix::from_fn(s, s, |r, c| dict.gram[(support[r], support[c])]);
        let rhs = CVector::from_fn(s, |r, _| phi_h_y[support[r]]);
        match nalgebra::Cholesky::new(gram) {
            Some(ch) => coef = ch.solve(&rhs),
            None => {
                support.pop();
                break;
            }
        }
        residual = y.clone();
        for (c, &i) in coef.iter().zip(&support) {
            residual -= dict.phi.column(i) * *c;
        }
    }

    let mut h = CVector::zeros(m);
    for (c, &i) in coef.iter().zip(&support) {
        h[i] = *c;
    }
    Ok(h)
}
