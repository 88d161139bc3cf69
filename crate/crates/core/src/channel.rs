//! Doubly-selective path channels and their AF-domain matrices.
//!
//! A path with delay `l` and normalized Doppler `v` maps to
//! `H = Λ_{c2} F Λ_{c1} Γ Δ_v Π^l Λ_{c1}^H F^H Λ_{c2}^H`. Three evaluations are
//! provided: the literal factorized product, the closed form for integer
//! Doppler, and the closed form with the Dirichlet-kernel leakage for
//! fractional Doppler. Time-domain propagation follows the same convention,
//! `r_n = Σ h_i s_{n-l_i} exp(-j2π v_i n / N)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::afdm::AfdmConfig;
use crate::error::{domain, shape, Result};
use crate::linalg::{chirp, cis, CMatrix, ZERO};

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TapRecord", into = "TapRecord")]
pub struct PathTap {
    pub gain: Complex64,
    pub delay: usize,
    /// Normalized Doppler `v = N f`, integer part plus a fraction in [-0.5, 0.5].
    pub doppler: f64,
}

#[derive(Serialize, Deserialize)]
struct TapRecord {
    gain_re: f64,
    gain_im: f64,
    delay: usize,
    doppler: f64,
}

impl From<TapRecord> for PathTap {
    fn from(r: TapRecord) -> Self {
        Self {
            gain: Complex64::new(r.gain_re, r.gain_im),
            delay: r.delay,
            doppler: r.doppler,
        }
    }
}

impl From<PathTap> for TapRecord {
    fn from(t: PathTap) -> Self {
        Self {
            gain_re: t.gain.re,
            gain_im: t.gain.im,
            delay: t.delay,
            doppler: t.doppler,
        }
    }
}

impl PathTap {
    pub fn new(gain: Complex64, delay: usize, doppler: f64) -> Self {
        Self { gain, delay, doppler }
    }

    /// Unit-gain copy, used to build per-path matrices.
    pub fn unit(delay: usize, doppler: f64) -> Self {
        Self::new(Complex64::new(1.0, 0.0), delay, doppler)
    }

    /// Integer part of the Doppler: nearest integer, halves toward zero.
    pub fn doppler_integer(&self) -> i64 {
        round_half_toward_zero(self.doppler)
    }

    pub fn doppler_fraction(&self) -> f64 {
        self.doppler - self.doppler_integer() as f64
    }

    /// Diagonal offset `loc = alpha + 2 N c1 l`.
    pub fn loc(&self, cfg: &AfdmConfig) -> i64 {
        self.doppler_integer() + cfg.delay_stride() * self.delay as i64
    }
}

pub fn round_half_toward_zero(x: f64) -> i64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 {
        x.trunc() as i64
    } else {
        r as i64
    }
}

/// A multipath realization; serializes as `{"taps": [{gain_re, gain_im, delay, doppler}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: Vec<PathTap>,
}

impl ChannelRealization {
    pub fn new(taps: Vec<PathTap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(domain("a channel needs at least one path"));
        }
        Ok(Self { taps })
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ch: Self = serde_json::from_str(s).map_err(|e| crate::Error::Config(e.to_string()))?;
        Self::new(ch.taps)
    }
}

fn n_of(cfg: &AfdmConfig) -> usize {
    cfg.n_subcarriers
}

/// Unitary DFT matrix `F[m, n] = exp(-j2π m n / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |m, k| cis(-2.0 * PI * ((m * k) % n) as f64 / n as f64) * scale)
}

fn chirp_diag(c: f64, n: usize) -> CMatrix {
    CMatrix::from_diagonal(&crate::linalg::CVector::from_fn(n, |k, _| chirp(c, k)))
}

/// Per-path matrix as the literal product of its factors.
pub fn path_matrix_exact(tap: &PathTap, cfg: &AfdmConfig) -> CMatrix {
    let n = n_of(cfg);
    let l = tap.delay;
    let f = dft_matrix(n);
    let lc1 = chirp_diag(cfg.c1, n);
    let lc2 = chirp_diag(cfg.c2, n);
    let daft = &lc2 * &f * &lc1;
    let idaft = daft.adjoint();

    // Γ Δ Π^l as one weighted cyclic shift: row k picks column (k - l) mod N.
    let mut mid = CMatrix::zeros(n, n);
    for k in 0..n {
        let doppler = cis(-2.0 * PI * tap.doppler * k as f64 / n as f64);
        let gamma = if k < l {
            let arg = cfg.c1 * ((n * n) as f64 + 2.0 * n as f64 * (k as f64 - l as f64));
            cis(-2.0 * PI * arg.rem_euclid(1.0))
        } else {
            Complex64::new(1.0, 0.0)
        };
        mid[(k, (k + n - l % n) % n)] = doppler * gamma;
    }
    &daft * mid * idaft
}

/// Shared phase `exp(j 2π/N (N c1 l² - q l + N c2 (q² - p²)))`.
fn path_phase(cfg: &AfdmConfig, l: usize, p: usize, q: usize) -> Complex64 {
    let n = n_of(cfg) as f64;
    let l_f = l as f64;
    let a = (cfg.c1 * l_f * l_f).rem_euclid(1.0);
    let b = -(((q * l) % n_of(cfg)) as f64) / n;
    let c = (cfg.c2 * ((q * q) as f64 - (p * p) as f64)).rem_euclid(1.0);
    cis(2.0 * PI * (a + b + c))
}

/// Closed form for integer Doppler: one non-zero per row at `q = (p + loc) mod N`.
pub fn path_matrix_integer(tap: &PathTap, cfg: &AfdmConfig) -> Result<CMatrix> {
    if tap.doppler.fract() != 0.0 {
        return Err(domain(format!("Doppler {} is not an integer", tap.doppler)));
    }
    let n = n_of(cfg);
    let loc = tap.loc(cfg).rem_euclid(n as i64) as usize;
    let mut h = CMatrix::zeros(n, n);
    for p in 0..n {
        let q = (p + loc) % n;
        h[(p, q)] = path_phase(cfg, tap.delay, p, q);
    }
    Ok(h)
}

/// Leakage kernel `(1/N) Σ_n exp(-j2π x n / N)` for `x = p - q + v + 2 N c1 l`.
fn dirichlet(x: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let wrapped = x.rem_euclid(nf);
    let near = wrapped.min(nf - wrapped);
    if near < 1e-3 {
        // Near a multiple of N the ratio loses digits; the direct sum does not.
        return (0..n).map(|k| cis(-2.0 * PI * x * k as f64 / nf)).sum::<Complex64>() / nf;
    }
    let num = cis(-2.0 * PI * x.rem_euclid(1.0)) - 1.0;
    let den = cis(-2.0 * PI * wrapped / nf) - 1.0;
    num / den / nf
}

/// Closed form valid for any real Doppler. Every diagonal `q - p ≡ d` carries the
/// same kernel value, so only N kernels are evaluated.
pub fn path_matrix_fractional(tap: &PathTap, cfg: &AfdmConfig) -> CMatrix {
    let n = n_of(cfg);
    let stride = cfg.delay_stride() as f64 * tap.delay as f64;
    let kernel: Vec<Complex64> = (0..n)
        .map(|d| dirichlet(-(d as f64) + tap.doppler + stride, n))
        .collect();
    CMatrix::from_fn(n, n, |p, q| kernel[(q + n - p) % n] * path_phase(cfg, tap.delay, p, q))
}

/// Same as [`path_matrix_fractional`] but keeps only the `2 k_v + 1` diagonals
/// nearest `loc`.
pub fn path_matrix_truncated(tap: &PathTap, cfg: &AfdmConfig, k_v: usize) -> CMatrix {
    let n = n_of(cfg);
    let loc = tap.loc(cfg).rem_euclid(n as i64) as usize;
    let mut h = path_matrix_fractional(tap, cfg);
    for p in 0..n {
        for q in 0..n {
            let off = (q + 2 * n - p - loc) % n;
            if off.min(n - off) > k_v {
                h[(p, q)] = ZERO;
            }
        }
    }
    h
}

/// `H_eff = Σ_i h_i H_i`.
pub fn effective_channel(ch: &ChannelRealization, cfg: &AfdmConfig) -> CMatrix {
    let n = n_of(cfg);
    ch.taps.iter().fold(CMatrix::zeros(n, n), |acc, tap| {
        acc + path_matrix_fractional(tap, cfg) * tap.gain
    })
}

/// Channel with each path's off-peak entries forced to zero beyond `k_v`.
pub fn truncated_channel(ch: &ChannelRealization, cfg: &AfdmConfig, k_v: usize) -> CMatrix {
    let n = n_of(cfg);
    ch.taps.iter().fold(CMatrix::zeros(n, n), |acc, tap| {
        acc + path_matrix_truncated(tap, cfg, k_v) * tap.gain
    })
}

/// Propagates a prefixed time-domain symbol through the taps and adds white
/// complex Gaussian noise of variance `noise_var` per sample. Sample index 0 of
/// the Doppler phase is the first sample after the prefix; samples preceding the
/// frame are taken as zero.
pub fn apply_channel_time<R: Rng + ?Sized>(
    s: &[Complex64],
    ch: &ChannelRealization,
    cfg: &AfdmConfig,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let n = n_of(cfg);
    let lc = cfg.cpp_len;
    if s.len() != n + lc {
        return Err(shape(format!("expected {} prefixed samples, got {}", n + lc, s.len())));
    }
    if ch.max_delay() > lc {
        return Err(domain(format!(
            "prefix of {lc} samples is shorter than the maximum delay {}",
            ch.max_delay()
        )));
    }
    let mut r = vec![ZERO; n + lc];
    for tap in &ch.taps {
        let step = -2.0 * PI * tap.doppler / n as f64;
        for (idx, out) in r.iter_mut().enumerate().skip(tap.delay) {
            let time = idx as f64 - lc as f64;
            *out += tap.gain * s[idx - tap.delay] * cis(step * time);
        }
    }
    if noise_var > 0.0 {
        add_awgn(&mut r, noise_var, rng);
    }
    Ok(r)
}

/// Adds `CN(0, noise_var)` samples in place.
pub fn add_awgn<R: Rng + ?Sized>(v: &mut [Complex64], noise_var: f64, rng: &mut R) {
    let sd = (noise_var / 2.0).sqrt();
    for z in v {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z += Complex64::new(re * sd, im * sd);
    }
}

/// Maximum normalized Doppler `v f_c / (c Δf)` for a speed in km/h.
pub fn alpha_max_from_speed(speed_kmh: f64, carrier_hz: f64, subcarrier_hz: f64) -> f64 {
    const LIGHT: f64 = 3.0e8;
    (speed_kmh / 3.6) * carrier_hz / (LIGHT * subcarrier_hz)
}

/// Random channel generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub paths: usize,
    pub l_max: usize,
    pub alpha_max: f64,
    /// Continuous Doppler when true; otherwise rounded to the nearest integer.
    pub fractional: bool,
    /// Forbid two paths from sharing a (delay, integer Doppler) cell.
    #[serde(default)]
    pub distinct: bool,
}

impl ChannelModel {
    /// Gains `CN(0, 1/P)`, delays uniform on `0..=l_max`, Dopplers uniform on
    /// `[-alpha_max, alpha_max]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        if self.paths == 0 {
            return Err(domain("path count must be positive"));
        }
        if self.distinct {
            let cells = (self.l_max + 1) * (2 * self.alpha_max.floor() as usize + 1);
            if cells < self.paths {
                return Err(domain(format!(
                    "only {cells} distinct delay/Doppler cells for {} paths",
                    self.paths
                )));
            }
        }
        let sd = (1.0 / (2.0 * self.paths as f64)).sqrt();
        let mut taps: Vec<PathTap> = Vec::with_capacity(self.paths);
        while taps.len() < self.paths {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let delay = rng.random_range(0..=self.l_max);
            let raw = if self.alpha_max > 0.0 {
                rng.random_range(-self.alpha_max..=self.alpha_max)
            } else {
                0.0
            };
            let doppler = if self.fractional {
                raw
            } else {
                round_half_toward_zero(raw) as f64
            };
            let tap = PathTap::new(Complex64::new(re * sd, im * sd), delay, doppler);
            if self.distinct
                && taps
                    .iter()
                    .any(|t| t.delay == delay && t.doppler_integer() == tap.doppler_integer())
            {
                continue;
            }
            taps.push(tap);
        }
        ChannelRealization::new(taps)
    }
}
