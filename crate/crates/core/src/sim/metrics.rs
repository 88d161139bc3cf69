use crate::afdm::gray_label;
use crate::error::{domain, shape, Result};
use crate::linalg::{frobenius_sq, CMatrix};

/// Reported in place of `−∞` when the error is exactly zero.
pub const NMSE_FLOOR_DB: f64 = -300.0;

/// `‖Ĥ − H‖_F² / ‖H‖_F²`.
pub fn nmse_ratio(est: &CMatrix, truth: &CMatrix) -> Result<f64> {
    if est.shape() != truth.shape() {
        return Err(shape(format!(
            "estimate {:?} vs truth {:?}",
            est.shape(),
            truth.shape()
        )));
    }
    let denom = frobenius_sq(truth);
    if !(denom > 0.0) {
        return Err(domain("true channel has zero norm"));
    }
    Ok(frobenius_sq(&(est - truth)) / denom)
}

pub fn ratio_to_db(r: f64) -> f64 {
    if r > 0.0 {
        (10.0 * r.log10()).max(NMSE_FLOOR_DB)
    } else {
        NMSE_FLOOR_DB
    }
}

pub fn nmse_db(est: &CMatrix, truth: &CMatrix) -> Result<f64> {
    nmse_ratio(est, truth).map(ratio_to_db)
}

/// Bit errors between two symbol-index streams under the Gray labelling.
pub fn bit_errors(decided: &[usize], truth: &[usize]) -> usize {
    decided
        .iter()
        .zip(truth)
        .map(|(a, b)| (gray_label(*a) ^ gray_label(*b)).count_ones() as usize)
        .sum()
}

/// Fraction of bits in error for `Q`-PSK symbol decisions.
pub fn ber(decided: &[usize], truth: &[usize], q: usize) -> Result<f64> {
    if decided.len() != truth.len() {
        return Err(shape("decision and truth lengths differ"));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let bits = truth.len() * q.trailing_zeros() as usize;
    Ok(bit_errors(decided, truth) as f64 / bits as f64)
}

/// Running mean and standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    pub count: usize,
    sum: f64,
    sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean (sample standard deviation over `√n`).
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}
