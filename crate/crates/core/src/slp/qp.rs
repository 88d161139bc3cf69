//! Simplex-constrained QP `min ‖T^T δ‖²  s.t. δ ⪰ 0, Σδ = 1`.

use nalgebra::Cholesky;

use crate::error::{domain, Result};
use crate::linalg::{RMatrix, RVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Bound on the projected-gradient (gradient mapping) norm.
    pub tol: f64,
    /// Iteration cap; `None` means `10 (2N)²`.
    pub max_iter: Option<usize>,
    /// Try an exact equality-constrained solve on the current support every this many iterations (0 disables).
    pub polish_every: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: None,
            polish_every: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub delta: RVector,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient norm at the returned point.
    pub residual: f64,
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn project(v: &RVector) -> RVector {
    RVector::from_vec(project_simplex(v.as_slice()))
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn top_eigenvalue(g: &RMatrix) -> f64 {
    let n = g.nrows();
    let mut v = RVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..500 {
        let gv = g * &v;
        let norm = gv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&gv);
        v = gv / norm;
        if (next - est).abs() <= 1e-10 * next.abs() {
            return next.max(norm);
        }
        est = next;
    }
    est
}

fn pg_norm(g: &RMatrix, d: &RVector, lip: f64) -> f64 {
    let grad = g * d * 2.0;
    (d - project(&(d - grad / lip))).norm() * lip
}

/// Exact minimizer on the support of `d`, accepted only if it is non-negative
/// and no inactive coordinate has a smaller gradient (the simplex KKT conditions).
fn polish(g: &RMatrix, d: &RVector, tol: f64) -> Option<RVector> {
    let support: Vec<usize> = (0..d.len()).filter(|&i| d[i] > 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let k = support.len();
    let sub = RMatrix::from_fn(k, k, |r, c| g[(support[r], support[c])]);
    let z = Cholesky::new(sub)?.solve(&RVector::from_element(k, 1.0));
    let total: f64 = z.sum();
    if !(total > 0.0) || z.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let mut out = RVector::zeros(d.len());
    for (r, &i) in support.iter().enumerate() {
        out[i] = z[r] / total;
    }
    let gd = g * &out;
    let level = 1.0 / total;
    if gd.iter().all(|v| *v >= level - tol) {
        Some(out)
    } else {
        None
    }
}

/// Accelerated projected gradient (FISTA with adaptive restart) from the
/// uniform point, step `1/L` with `L = 2 σ_max(T)²` from power iteration.
/// Stops when the projected-gradient norm drops to `tol` or a support solve
/// certifies optimality; otherwise returns the last iterate unconverged.
pub fn solve_dual_qp(t_mat: &RMatrix, opts: &QpOptions) -> Result<QpSolution> {
    let m = t_mat.nrows();
    if m == 0 {
        return Err(domain("empty constraint matrix"));
    }
    if t_mat.iter().any(|v| !v.is_finite()) {
        return Err(domain("constraint matrix has non-finite entries"));
    }
    let g = t_mat * t_mat.transpose();
    let max_iter = opts.max_iter.unwrap_or(10 * m * m);
    let finish = |d: RVector, iterations: usize, converged: bool, residual: f64| {
        let objective = d.dot(&(&g * &d));
        QpSolution {
            delta: d,
            objective,
            iterations,
            converged,
            residual,
        }
    };

    let lip = 2.0 * top_eigenvalue(&g) * 1.01;
    let mut x = RVector::from_element(m, 1.0 / m as f64);
    if lip == 0.0 {
        return Ok(finish(x, 0, true, 0.0));
    }
    let mut y = x.clone();
    let mut momentum = 1.0f64;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let grad = &g * &y * 2.0;
        let next = project(&(&y - grad / lip));
        // restart when the step opposes the momentum direction
        let restart = (&y - &next).dot(&(&next - &x)) > 0.0;
        let m_next = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt())
        };
        y = if restart {
            next.clone()
        } else {
            &next + (&next - &x) * ((momentum - 1.0) / m_next)
        };
        x = next;
        momentum = m_next;

        if it % 10 == 0 || it == max_iter {
            residual = pg_norm(&g, &x, lip);
            if residual <= opts.tol {
                return Ok(finish(x, it, true, residual));
            }
        }
        if opts.polish_every > 0 && it % opts.polish_every == 0 {
            if let Some(d) = polish(&g, &x, opts.tol) {
                let r = pg_norm(&g, &d, lip);
                if r <= opts.tol.max(1e-12) * 10.0 {
                    return Ok(finish(d, it, true, r));
                }
            }
        }
    }
    Ok(finish(x, max_iter, false, residual))
}
