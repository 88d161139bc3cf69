//! AFDM symbol-domain transforms, chirp-periodic prefix, and Q-PSK mapping.
//!
//! The DAFT is evaluated as `Λ_{c2} F Λ_{c1}` (chirp, unitary FFT, chirp), and
//! the IDAFT as its adjoint. Both are O(N log N). The O(N²) double sums live in
//! [`crate::oracle`] for cross-checking.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Result};
use crate::linalg::{chirp, cis};

/// Carrier geometry and chirp parameters of one AFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfdmConfig {
    pub n_subcarriers: usize,
    pub c1: f64,
    pub c2: f64,
    pub cpp_len: usize,
    pub psk_order: usize,
}

impl AfdmConfig {
    /// Validates `N` even, `2 N c1` integral (so the prefix is a plain cyclic
    /// prefix) and `Q` a power of two no smaller than 2.
    pub fn new(n_subcarriers: usize, c1: f64, c2: f64, cpp_len: usize, psk_order: usize) -> Result<Self> {
        let cfg = Self {
            n_subcarriers,
            c1,
            c2,
            cpp_len,
            psk_order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Smallest chirp rate that separates all paths for Doppler up to `alpha_max`
    /// while keeping `2 N c1` integral: `c1 = (2 ceil(alpha_max) + 1) / (2N)`.
    /// `c2 = 0` and the prefix covers `l_max`.
    pub fn for_channel(n_subcarriers: usize, alpha_max: f64, l_max: usize, psk_order: usize) -> Result<Self> {
        Self::new(
            n_subcarriers,
            default_c1(n_subcarriers, alpha_max),
            0.0,
            l_max,
            psk_order,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_subcarriers;
        if n == 0 || !n.is_multiple_of(2) {
            return Err(domain(format!("subcarrier count must be positive and even, got {n}")));
        }
        if !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(domain("chirp parameters must be finite"));
        }
        let k = 2.0 * n as f64 * self.c1;
        if (k - k.round()).abs() > 1e-9 {
            return Err(domain(format!("2*N*c1 = {k} is not an integer")));
        }
        if self.psk_order < 2 || !self.psk_order.is_power_of_two() {
            return Err(domain(format!(
                "PSK order must be a power of two >= 2, got {}",
                self.psk_order
            )));
        }
        if self.cpp_len >= n {
            return Err(domain("prefix must be shorter than the symbol"));
        }
        Ok(())
    }

    /// `2 N c1`, the per-delay diagonal offset of the AF-domain channel.
    pub fn delay_stride(&self) -> i64 {
        (2.0 * self.n_subcarriers as f64 * self.c1).round() as i64
    }

    /// Path separability: `c1 >= (2 alpha_max + 1) / (2N)`. Equality is enough for
    /// integer Doppler because diagonal offsets `alpha + 2 N c1 l` stay distinct.
    pub fn separates(&self, alpha_max: f64) -> bool {
        self.c1 * 2.0 * self.n_subcarriers as f64 >= 2.0 * alpha_max + 1.0 - 1e-12
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.psk_order.trailing_zeros() as usize
    }
}

pub fn default_c1(n_subcarriers: usize, alpha_max: f64) -> f64 {
    (2.0 * alpha_max.ceil() + 1.0) / (2.0 * n_subcarriers as f64)
}

/// DAFT/IDAFT engine with precomputed chirps and FFT plans.
#[derive(Clone)]
pub struct Modem {
    cfg: AfdmConfig,
    chirp_c1: Vec<Complex64>,
    chirp_c2: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Modem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modem").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl Modem {
    pub fn new(cfg: AfdmConfig) -> Self {
        let n = cfg.n_subcarriers;
        let mut planner = FftPlanner::new();
        Self {
            cfg,
            chirp_c1: (0..n).map(|k| chirp(cfg.c1, k)).collect(),
            chirp_c2: (0..n).map(|k| chirp(cfg.c2, k)).collect(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn config(&self) -> &AfdmConfig {
        &self.cfg
    }

    fn n(&self) -> usize {
        self.cfg.n_subcarriers
    }

    /// AF domain to time domain:
    /// `s_n = N^{-1/2} sum_m x_m exp(j2π(c1 n² + m n / N + c2 m²))`.
    pub fn idaft(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x.len(), "idaft input")?;
        let scale = 1.0 / (self.n() as f64).sqrt();
        let mut buf: Vec<Complex64> = x.iter().zip(&self.chirp_c2).map(|(v, c)| v * c.conj()).collect();
        self.inverse.process(&mut buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp_c1) {
            *v *= c.conj() * scale;
        }
        Ok(buf)
    }

    /// Time domain (prefix removed) to AF domain; exact inverse of [`Modem::idaft`].
    pub fn daft(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(r.len(), "daft input")?;
        let scale = 1.0 / (self.n() as f64).sqrt();
        let mut buf: Vec<Complex64> = r.iter().zip(&self.chirp_c1).map(|(v, c)| v * c).collect();
        self.forward.process(&mut buf);
        for (v, c) in buf.iter_mut().zip(&self.chirp_c2) {
            *v *= c * scale;
        }
        Ok(buf)
    }

    /// Prepends `L_c` chirp-periodic prefix samples,
    /// `s_n = s_{N+n} exp(-j2π c1 (N² + 2 N n))` for `n = -L_c..-1`.
    pub fn add_cpp(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(s.len(), "add_cpp input")?;
        let n = self.n();
        let lc = self.cfg.cpp_len;
        let mut out = Vec::with_capacity(n + lc);
        for k in (1..=lc).rev() {
            let idx = -(k as f64);
            let phase = -2.0 * PI * (self.cfg.c1 * ((n * n) as f64 + 2.0 * n as f64 * idx)).rem_euclid(1.0);
            out.push(s[n - k] * cis(phase));
        }
        out.extend_from_slice(s);
        Ok(out)
    }

    pub fn remove_cpp(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let lc = self.cfg.cpp_len;
        if s.len() != self.n() + lc {
            return Err(shape(format!(
                "remove_cpp expects {} samples, got {}",
                self.n() + lc,
                s.len()
            )));
        }
        Ok(s[lc..].to_vec())
    }

    fn check_len(&self, got: usize, what: &str) -> Result<()> {
        if got != self.n() {
            return Err(shape(format!("{what}: expected length {}, got {got}", self.n())));
        }
        Ok(())
    }
}

/// Constellation point `k` (0-based) of Q-PSK: `exp(jπ(2k+1)/Q)`.
pub fn psk_point(k: usize, q: usize) -> Complex64 {
    cis(PI * (2 * k + 1) as f64 / q as f64)
}

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut k = g;
    while g > 0 {
        g >>= 1;
        k ^= g;
    }
    k
}

/// Gray label of constellation index `k`; adjacent points differ in one bit.
pub fn gray_label(k: usize) -> usize {
    gray(k)
}

/// Maps bits (MSB first within each symbol) to Gray-labelled Q-PSK indices.
pub fn bits_to_indices(bits: &[bool], q: usize) -> Result<Vec<usize>> {
    if q < 2 || !q.is_power_of_two() {
        return Err(domain(format!("PSK order must be a power of two >= 2, got {q}")));
    }
    let m = q.trailing_zeros() as usize;
    if !bits.len().is_multiple_of(m) {
        return Err(shape(format!("{} bits is not a multiple of {m}", bits.len())));
    }
    Ok(bits
        .chunks(m)
        .map(|chunk| gray_inverse(chunk.iter().fold(0, |acc, &b| (acc << 1) | b as usize)))
        .collect())
}

pub fn psk_modulate(bits: &[bool], q: usize) -> Result<Vec<Complex64>> {
    Ok(bits_to_indices(bits, q)?.into_iter().map(|k| psk_point(k, q)).collect())
}

/// Hard decision to the nearest constellation point. The decision regions are
/// angular sectors `[2πk/Q, 2π(k+1)/Q)`; a sample lying on a sector edge goes to
/// the smaller of the two adjacent indices.
pub fn psk_demodulate(y: &[Complex64], q: usize) -> Vec<usize> {
    y.iter().map(|&v| psk_decide(v, q)).collect()
}

pub fn psk_decide(v: Complex64, q: usize) -> usize {
    let mut theta = v.im.atan2(v.re);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    let pos = theta * q as f64 / (2.0 * PI);
    let edge = pos.round();
    if (pos - edge).abs() < 1e-12 {
        let upper = (edge as usize) % q;
        let lower = (upper + q - 1) % q;
        return upper.min(lower);
    }
    (pos.floor() as usize) % q
}
