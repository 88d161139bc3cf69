//! Sparse Bayesian learning with a three-layer hierarchical Laplace prior.
//!
//! Model: `y = Φ h + w`, `w ~ CN(0, β I)`, `h ~ CN(0, diag(α))`,
//! `α_i ~ Gamma(1, λ/2)`, `λ ~ Gamma(ν/2, ν/2)`, `β ~ InvGamma(a, b)`.
//! Each EM iteration computes the Gaussian posterior of `h` (E-step), then
//! updates `α`, `β`, `λ` in closed form and `ν` by a scalar root solve (M-step).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::linalg::{cholesky, CMatrix, CVector, ZERO};
use crate::special;

use super::Dictionary;

/// Atoms whose prior variance falls below this are pruned from the posterior.
pub const PRUNE_FLOOR: f64 = 1e-12;

/// How the posterior mean is turned into the channel estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// Use every entry of μ.
    All,
    /// Keep the Δ entries of largest magnitude.
    Strongest(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SblHyper {
    /// Inverse-Gamma shape on β.
    pub a: f64,
    /// Inverse-Gamma rate on β.
    pub b: f64,
    pub nu0: f64,
    pub epsilon: f64,
    pub n_max: usize,
    pub combination: Combination,
}

impl Default for SblHyper {
    fn default() -> Self {
        Self {
            a: 1e-4,
            b: 1e-4,
            nu0: 1.0,
            epsilon: 1e-6,
            n_max: 200,
            combination: Combination::All,
        }
    }
}

impl SblHyper {
    pub fn validate(&self, atoms: usize) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.nu0 > 0.0 && self.epsilon > 0.0) {
            return Err(Error::Config("a, b, nu0 and epsilon must be positive".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        if let Combination::Strongest(keep) = self.combination {
            if keep == 0 || keep > atoms {
                return Err(Error::Config(format!(
                    "partial combination keeps {keep} of {atoms} atoms"
                )));
            }
        }
        Ok(())
    }
}

/// Posterior moments and hyperparameters carried across iterations.
#[derive(Debug, Clone)]
pub struct SblState {
    pub mu: CVector,
    pub sigma: CMatrix,
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub lambda: f64,
    pub nu: f64,
}

impl SblState {
    fn hyper_valid(&self) -> bool {
        self.alpha.iter().all(|a| a.is_finite() && *a >= 0.0)
            && self.beta.is_finite()
            && self.beta > 0.0
            && self.lambda.is_finite()
            && self.lambda > 0.0
            && self.nu.is_finite()
            && self.nu > 0.0
    }

    fn active(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] > PRUNE_FLOOR).collect()
    }
}

/// One row of the per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu_norm: f64,
    pub delta_alpha_sq: f64,
    pub beta: f64,
    pub lambda: f64,
    pub nu: f64,
    /// False when the `ν` equation had no root in the bracket and the old value was kept.
    pub nu_solved: bool,
}

#[derive(Debug, Clone)]
pub struct SblOutput {
    /// Channel coefficients after the configured combination.
    pub h: CVector,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub state: SblState,
}

/// α = 1, β = var(y)/10, λ = 1, ν = ν0; posterior moments zeroed.
pub fn initial_state(y: &CVector, atoms: usize, hyper: &SblHyper) -> SblState {
    let n = y.len().max(1) as f64;
    let mean = y.iter().sum::<Complex64>() / n;
    let var = y.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n;
    SblState {
        mu: CVector::zeros(atoms),
        sigma: CMatrix::zeros(atoms, atoms),
        alpha: vec![1.0; atoms],
        beta: (var / 10.0).max(1e-12),
        lambda: 1.0,
        nu: hyper.nu0,
    }
}

/// `Σ = (Φ^H Φ / β + diag(α)^{-1})^{-1}`, `μ = Σ Φ^H y / β`, restricted to the
/// unpruned atoms; pruned rows and columns are zero.
pub fn e_step(phi_h_y: &CVector, dict: &Dictionary, state: &mut SblState) -> Result<()> {
    let m = dict.len();
    let active = state.active();
    state.mu = CVector::zeros(m);
    state.sigma = CMatrix::zeros(m, m);
    if active.is_empty() {
        return Ok(());
    }
    let k = active.len();
    let inv_beta = 1.0 / state.beta;
    let a = CMatrix::from_fn(k, k, |r, c| {
        let g = dict.gram[(active[r], active[c])] * inv_beta;
        if r == c {
            g + 1.0 / state.alpha[active[r]]
        } else {
            g
        }
    });
    let chol = cholesky(a, "posterior precision")?;
    let sigma = chol.inverse();
    let rhs = CVector::from_fn(k, |r, _| phi_h_y[active[r]] * inv_beta);
    let mu = &sigma * rhs;
    for (r, &i) in active.iter().enumerate() {
        state.mu[i] = mu[r];
        for (c, &j) in active.iter().enumerate() {
            state.sigma[(i, j)] = sigma[(r, c)];
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct MStepReport {
    pub delta_alpha_sq: f64,
    pub nu_solved: bool,
}

/// Closed-form α, β, λ updates followed by the ν root solve.
pub fn m_step(y: &CVector, dict: &Dictionary, state: &mut SblState, hyper: &SblHyper) -> MStepReport {
    let m = dict.len();
    let n = y.len() as f64;
    let lambda = state.lambda;

    let old_alpha = state.alpha.clone();
    let new_alpha: Vec<f64> = (0..m)
        .map(|i| {
            let s = state.sigma[(i, i)].re.max(0.0) + state.mu[i].norm_sqr();
            // (sqrt(1 + 4 λ s) - 1) / (2 λ), rationalized
            2.0 * s / ((1.0 + 4.0 * lambda * s).sqrt() + 1.0)
        })
        .collect();

    // E‖y - Φh‖² = ‖y - Φμ‖² + tr(Φ Σ Φ^H); the trace equals
    // β Σ_i (1 - Σ_ii / α_i) for the α that produced Σ.
    let resid = y - &dict.phi * &state.mu;
    let spread: f64 = (0..m)
        .filter(|&i| old_alpha[i] > PRUNE_FLOOR)
        .map(|i| (1.0 - state.sigma[(i, i)].re / old_alpha[i]).max(0.0))
        .sum();
    let expected_sq = state.beta * spread + resid.norm_squared();
    state.beta = (2.0 * hyper.b + expected_sq) / (2.0 * hyper.a - 2.0 + n);

    let alpha_sum: f64 = new_alpha.iter().sum();
    state.lambda = (m as f64 + state.nu / 2.0 - 1.0) / (alpha_sum / 2.0 + state.nu / 2.0);

    let nu_solved = match special::solve_nu(state.lambda, 1e-8) {
        Some(nu) => {
            state.nu = nu;
            true
        }
        None => false,
    };

    let delta_alpha_sq = old_alpha.iter().zip(&new_alpha).map(|(a, b)| (a - b).powi(2)).sum();
    state.alpha = new_alpha;
    MStepReport {
        delta_alpha_sq,
        nu_solved,
    }
}

/// Zeroes all but the `keep` largest-magnitude entries.
pub fn keep_strongest(h: &CVector, keep: usize) -> CVector {
    if keep >= h.len() {
        return h.clone();
    }
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| h[b].norm().partial_cmp(&h[a].norm()).unwrap().then(a.cmp(&b)));
    let mut out = CVector::from_element(h.len(), ZERO);
    for &i in &order[..keep] {
        out[i] = h[i];
    }
    out
}

/// Runs EM until `‖α_p - α_{p-1}‖² <= ε` or `n_max` iterations, and returns
/// the final posterior mean (optionally reduced to its strongest entries).
pub fn sbl_estimate(y: &CVector, dict: &Dictionary, hyper: &SblHyper) -> Result<SblOutput> {
    if y.len() != dict.phi.nrows() {
        return Err(shape(format!(
            "observation length {} != dictionary rows {}",
            y.len(),
            dict.phi.nrows()
        )));
    }
    hyper.validate(dict.len())?;
    let phi_h_y = dict.phi_h(y);
    let mut state = initial_state(y, dict.len(), hyper);
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=hyper.n_max {
        e_step(&phi_h_y, dict, &mut state).map_err(|e| Error::Diverged {
            iteration,
            reason: e.to_string(),
        })?;
        let report = m_step(y, dict, &mut state, hyper);
        let mu_norm = state.mu.norm();
        if !mu_norm.is_finite() || !state.hyper_valid() {
            return Err(Error::Diverged {
                iteration,
                reason: format!(
                    "non-finite or non-positive state: beta={}, lambda={}, nu={}",
                    state.beta, state.lambda, state.nu
                ),
            });
        }
        trace.push(TraceRow {
            iteration,
            mu_norm,
            delta_alpha_sq: report.delta_alpha_sq,
            beta: state.beta,
            lambda: state.lambda,
            nu: state.nu,
            nu_solved: report.nu_solved,
        });
        if report.delta_alpha_sq <= hyper.epsilon {
            converged = true;
            break;
        }
    }

    let h = match hyper.combination {
        Combination::All => state.mu.clone(),
        Combination::Strongest(keep) => keep_strongest(&state.mu, keep),
    };
    Ok(SblOutput {
        h,
        trace,
        converged,
        state,
    })
}

/// Writes the trace as CSV: `iteration,mu_norm,delta_alpha_sq,beta,lambda,nu`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,mu_norm,delta_alpha_sq,beta,lambda,nu\n");
    for r in trace {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e}\n",
            r.iteration, r.mu_norm, r.delta_alpha_sq, r.beta, r.lambda, r.nu
        ));
    }
    out
}
