use num_complex::Complex64;

use crate::afdm::AfdmConfig;
use crate::channel::{path_matrix_fractional, PathTap};
use crate::error::{domain, shape, Result};
use crate::linalg::{CMatrix, CVector};

/// Grid coordinates of one dictionary column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub delay: usize,
    pub doppler: f64,
}

/// `Φ = [H_1 x_p | ... | H_M x_p]` over a delay-Doppler grid.
#[derive(Debug, Clone)]
pub struct Dictionary {
    pub phi: CMatrix,
    pub atoms: Vec<Atom>,
    pub atom_matrices: Vec<CMatrix>,
    /// `Φ^H Φ`, shared by every estimator call on this dictionary.
    pub gram: CMatrix,
    pub oversampling: usize,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// More than four atoms per observation is flagged by the CLI.
    pub fn is_overcomplete(&self) -> bool {
        self.len() > 4 * self.phi.nrows()
    }

    /// Index of the atom with the same delay and the nearest grid Doppler.
    pub fn nearest_atom(&self, delay: usize, doppler: f64) -> Option<usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.delay == delay)
            .min_by(|(_, a), (_, b)| {
                (a.doppler - doppler)
                    .abs()
                    .partial_cmp(&(b.doppler - doppler).abs())
                    .unwrap()
            })
            .map(|(i, _)| i)
    }

    /// `H̃ = Σ_i ĥ_i H_i`.
    pub fn reconstruct(&self, h: &CVector) -> Result<CMatrix> {
        if h.len() != self.len() {
            return Err(shape(format!("{} coefficients for {} atoms", h.len(), self.len())));
        }
        let n = self.phi.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (coef, m) in h.iter().zip(&self.atom_matrices) {
            if coef.norm_sqr() > 0.0 {
                out += m * *coef;
            }
        }
        Ok(out)
    }

    pub fn phi_h(&self, y: &CVector) -> CVector {
        self.phi.ad_mul(y)
    }
}

/// Atoms enumerate delays `0..=l_max` against Dopplers `k / G` for
/// `|k| <= G ceil(alpha_max)`, so `M = (l_max + 1)(2 G ceil(alpha_max) + 1)`.
pub fn build_dictionary(
    pilot: &[Complex64],
    cfg: &AfdmConfig,
    l_max: usize,
    alpha_max: f64,
    oversampling: usize,
) -> Result<Dictionary> {
    let n = cfg.n_subcarriers;
    if pilot.len() != n {
        return Err(shape(format!("pilot length {} != N = {n}", pilot.len())));
    }
    if pilot.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(domain("pilot is identically zero"));
    }
    if oversampling == 0 {
        return Err(domain("Doppler oversampling must be positive"));
    }
    let span = (alpha_max.ceil() as i64) * oversampling as i64;
    let xp = CVector::from_column_slice(pilot);
    let mut atoms = Vec::new();
    let mut atom_matrices = Vec::new();
    let mut columns = Vec::new();
    for delay in 0..=l_max {
        for k in -span..=span {
            let doppler = k as f64 / oversampling as f64;
            let h = path_matrix_fractional(&PathTap::unit(delay, doppler), cfg);
            columns.push(&h * &xp);
            atom_matrices.push(h);
            atoms.push(Atom { delay, doppler });
        }
    }
    let phi = CMatrix::from_columns(&columns);
    let gram = phi.ad_mul(&phi);
    Ok(Dictionary {
        phi,
        atoms,
        atom_matrices,
        gram,
        oversampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channel, ChannelRealization};
    use crate::linalg::max_abs_diff_vec;

    fn cfg() -> AfdmConfig {
        AfdmConfig::for_channel(64, 0.154, 2, 4).unwrap()
    }

    fn impulse() -> Vec<Complex64> {
        let mut e = vec![Complex64::new(0.0, 0.0); 64];
        e[0] = Complex64::new(1.0, 0.0);
        e
    }

    #[test]
    fn grid_sizes() {
        let d = build_dictionary(&impulse(), &cfg(), 2, 0.9, 1).unwrap();
        assert_eq!(d.len(), 9);
        let d = build_dictionary(&impulse(), &cfg(), 2, 0.154, 4).unwrap();
        assert_eq!(d.len(), 27);
        assert_eq!(d.phi.shape(), (64, 27));
    }

    #[test]
    fn on_grid_tap_is_a_scaled_column() {
        let c = cfg();
        let d = build_dictionary(&impulse(), &c, 2, 0.154, 1).unwrap();
        let h = Complex64::new(0.3, -0.7);
        let ch = ChannelRealization::new(vec![PathTap::new(h, 1, -1.0)]).unwrap();
        let y = effective_channel(&ch, &c) * CVector::from_column_slice(&impulse());
        let idx = d.nearest_atom(1, -1.0).unwrap();
        let col: Vec<Complex64> = d.phi.column(idx).iter().map(|z| z * h).collect();
        assert!(max_abs_diff_vec(y.as_slice(), &col) < 1e-12);
    }

    #[test]
    fn rejects_zero_pilot() {
        let z = vec![Complex64::new(0.0, 0.0); 64];
        assert!(build_dictionary(&z, &cfg(), 2, 0.154, 1).is_err());
    }
}
