//! Experiment configuration (JSON). Every field has a default so a config file
//! only needs the values it changes; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::afdm::{default_c1, AfdmConfig};
use crate::channel::{alpha_max_from_speed, ChannelModel};
use crate::error::{Error, Result};
use crate::sbl::{Combination, SblHyper};
use crate::slp::QpOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfdmSection {
    pub n_subcarriers: usize,
    /// Defaults to `(2⌈α_max⌉ + 1) / (2N)`.
    pub c1: Option<f64>,
    pub c2: f64,
    /// Defaults to `l_max`.
    pub cpp_len: Option<usize>,
    pub psk_order: usize,
}

impl Default for AfdmSection {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            c1: None,
            c2: 0.0,
            cpp_len: None,
            psk_order: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub paths: usize,
    pub l_max: usize,
    pub v_max_kmh: f64,
    pub carrier_hz: f64,
    pub subcarrier_hz: f64,
    /// Continuous Doppler when true, integer Doppler otherwise.
    pub fractional: bool,
    /// Forbid paths that share a delay and integer Doppler.
    pub distinct: bool,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            paths: 3,
            l_max: 2,
            v_max_kmh: 625.0,
            carrier_hz: 4e9,
            subcarrier_hz: 15e3,
            fractional: true,
            distinct: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    pub a: f64,
    pub b: f64,
    pub nu0: f64,
    pub epsilon: f64,
    pub n_max: usize,
    /// Doppler grid oversampling factor `G`.
    pub grid: usize,
    /// Combination factor `η`; the partial estimator keeps `η P` entries.
    pub eta: Option<usize>,
    pub omp: bool,
    /// OMP sparsity; defaults to the path count.
    pub omp_sparsity: Option<usize>,
    pub mmse_genie: bool,
    pub zc_root: usize,
    /// Symbols per uplink frame (one pilot, the rest data).
    pub frame_len: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let h = SblHyper::default();
        Self {
            a: h.a,
            b: h.b,
            nu0: h.nu0,
            epsilon: h.epsilon,
            n_max: h.n_max,
            grid: 4,
            eta: Some(4),
            omp: true,
            omp_sparsity: None,
            mmse_genie: true,
            zc_root: 1,
            frame_len: 8,
        }
    }
}

/// Where the base station's downlink CSI comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiSource {
    Perfect,
    /// Uplink SBL estimate at the same SNR.
    Estimated,
    /// True matrix with entries farther than `k_v` from each path peak zeroed.
    Truncated(usize),
}

impl CsiSource {
    pub fn label(&self) -> String {
        match self {
            Self::Perfect => "perfect".into(),
            Self::Estimated => "estimated".into(),
            Self::Truncated(k) => format!("truncated_kv{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrecoderSection {
    /// Transmit power budget `P_m`; defaults to `N` (unit power per symbol).
    pub power: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub mmse_baseline: bool,
    pub csi: Vec<CsiSource>,
    pub symbols_per_trial: usize,
    /// SNRs at which received SLP constellation points are recorded.
    pub constellation_snr_db: Vec<f64>,
    /// Number of leading trials whose points are recorded.
    pub constellation_trials: usize,
}

impl Default for PrecoderSection {
    fn default() -> Self {
        Self {
            power: None,
            tol: 1e-8,
            max_iter: None,
            mmse_baseline: true,
            csi: vec![CsiSource::Perfect, CsiSource::Estimated],
            symbols_per_trial: 7,
            constellation_snr_db: vec![20.0],
            constellation_trials: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: (0..=6).map(|k| 5.0 * k as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub afdm: AfdmSection,
    pub channel: ChannelSection,
    pub estimator: EstimatorSection,
    pub precoder: PrecoderSection,
    pub sweep: SweepSection,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            afdm: AfdmSection::default(),
            channel: ChannelSection::default(),
            estimator: EstimatorSection::default(),
            precoder: PrecoderSection::default(),
            sweep: SweepSection::default(),
            trials: 200,
            seed: 2025,
            parallelism: 0,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; syntax and schema errors carry the line and column.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let msg = full.rsplit_once(" at line ").map_or(full.as_str(), |(m, _)| m);
            Error::Config(format!("line {}, column {}: {msg}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. A missing file surfaces as [`Error::Io`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn alpha_max(&self) -> f64 {
        let c = &self.channel;
        alpha_max_from_speed(c.v_max_kmh, c.carrier_hz, c.subcarrier_hz)
    }

    pub fn afdm_config(&self) -> Result<AfdmConfig> {
        let a = &self.afdm;
        let c1 = a.c1.unwrap_or_else(|| default_c1(a.n_subcarriers, self.alpha_max()));
        AfdmConfig::new(
            a.n_subcarriers,
            c1,
            a.c2,
            a.cpp_len.unwrap_or(self.channel.l_max),
            a.psk_order,
        )
    }

    pub fn channel_model(&self) -> ChannelModel {
        ChannelModel {
            paths: self.channel.paths,
            l_max: self.channel.l_max,
            alpha_max: self.alpha_max(),
            fractional: self.channel.fractional,
            distinct: self.channel.distinct,
        }
    }

    pub fn sbl_hyper(&self, combination: Combination) -> SblHyper {
        let e = &self.estimator;
        SblHyper {
            a: e.a,
            b: e.b,
            nu0: e.nu0,
            epsilon: e.epsilon,
            n_max: e.n_max,
            combination,
        }
    }

    pub fn partial_keep(&self) -> Option<usize> {
        self.estimator.eta.map(|eta| eta * self.channel.paths)
    }

    pub fn power(&self) -> f64 {
        self.precoder.power.unwrap_or(self.afdm.n_subcarriers as f64)
    }

    pub fn qp_options(&self) -> QpOptions {
        QpOptions {
            tol: self.precoder.tol,
            max_iter: self.precoder.max_iter,
            ..QpOptions::default()
        }
    }

    pub fn dictionary_size(&self) -> usize {
        let reach = self.alpha_max().ceil() as usize;
        (self.channel.l_max + 1) * (2 * self.estimator.grid * reach + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let afdm = self.afdm_config()?;
        let c = &self.channel;
        if c.paths == 0 {
            return bad("channel.paths must be positive".into());
        }
        for (name, v) in [
            ("channel.v_max_kmh", c.v_max_kmh),
            ("channel.carrier_hz", c.carrier_hz),
            ("channel.subcarrier_hz", c.subcarrier_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if afdm.cpp_len < c.l_max {
            return bad(format!(
                "afdm.cpp_len {} is shorter than channel.l_max {}",
                afdm.cpp_len, c.l_max
            ));
        }
        let e = &self.estimator;
        if e.grid == 0 {
            return bad("estimator.grid must be at least 1".into());
        }
        if e.frame_len == 0 {
            return bad("estimator.frame_len must be at least 1".into());
        }
        let m = self.dictionary_size();
        let combination = match self.partial_keep() {
            Some(0) => return bad("estimator.eta must be positive".into()),
            Some(k) if k > m => {
                return bad(format!(
                    "estimator.eta keeps {k} atoms but the grid has only {m}; raise estimator.grid"
                ))
            }
            Some(k) => Combination::Strongest(k),
            None => Combination::All,
        };
        self.sbl_hyper(combination).validate(m)?;
        if let Some(k) = e.omp_sparsity {
            if k == 0 || k > m {
                return bad(format!("estimator.omp_sparsity must be in 1..={m}"));
            }
        }
        crate::sim::zc_pilot(afdm.n_subcarriers, e.zc_root)
            .map_err(|err| Error::Config(format!("estimator.zc_root: {err}")))?;
        let p = &self.precoder;
        if !(self.power() > 0.0 && self.power().is_finite()) {
            return bad("precoder.power must be positive".into());
        }
        if !(p.tol > 0.0) {
            return bad("precoder.tol must be positive".into());
        }
        if p.symbols_per_trial == 0 {
            return bad("precoder.symbols_per_trial must be positive".into());
        }
        if self.sweep.snr_db.is_empty() || self.sweep.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("sweep.snr_db must be a non-empty list of finite values".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_table() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let a = cfg.afdm_config().unwrap();
        assert_eq!(a.n_subcarriers, 64);
        assert!((a.c1 - 3.0 / 128.0).abs() < 1e-15);
        assert_eq!(a.cpp_len, 2);
        assert!((cfg.alpha_max() - 0.154_320_987_654).abs() < 1e-9);
        assert_eq!(cfg.dictionary_size(), 27);
    }

    #[test]
    fn partial_round_trip() {
        let cfg = ExperimentConfig::from_json_str(r#"{"trials": 5, "sweep": {"snr_db": [10]}}"#).unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(cfg.sweep.snr_db, vec![10.0]);
        let again = ExperimentConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "{\n  \"trials\": 5,\n  \"sweep\": {\"snr_db\": [10,]}\n}";
        let msg = ExperimentConfig::from_json_str(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        let text = "{\n\n  \"unknown_key\": 1\n}";
        let msg = ExperimentConfig::from_json_str(text).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn semantic_errors() {
        for text in [
            r#"{"trials": 0}"#,
            r#"{"sweep": {"snr_db": []}}"#,
            r#"{"estimator": {"grid": 1}}"#,
            r#"{"afdm": {"n_subcarriers": 63}}"#,
            r#"{"channel": {"v_max_kmh": -1}}"#,
            r#"{"csi": 1}"#,
        ] {
            assert!(ExperimentConfig::from_json_str(text).is_err(), "{text}");
        }
        let ok = r#"{"precoder": {"csi": ["perfect", {"truncated": 2}]}}"#;
        let cfg = ExperimentConfig::from_json_str(ok).unwrap();
        assert_eq!(cfg.precoder.csi[1], CsiSource::Truncated(2));
    }
}
