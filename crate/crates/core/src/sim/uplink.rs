//! Uplink estimation sweep: one pilot plus `L − 1` data symbols per frame.

use std::f64::consts::LN_10;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::afdm::{psk_demodulate, psk_point, Modem};
use crate::channel::{add_awgn, apply_channel_time, effective_channel, ChannelRealization};
use crate::error::Result;
use crate::linalg::{norm_sq, CMatrix, CVector, ZERO};
use crate::par::run_trials;
use crate::sbl::{
    bcrlb, build_dictionary, genie_prior, keep_strongest, mmse_equalize, mmse_estimate, omp_estimate, sbl_estimate,
    Combination, Dictionary,
};

use super::metrics::{bit_errors, nmse_ratio, ratio_to_db, MeanAccumulator};
use super::output::{ResultRow, ResultTable};
use super::{zc_pilot, ExperimentConfig};

/// Independent random stream for `(seed, trial, purpose)`.
pub fn trial_rng(seed: u64, trial: usize, salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 20) | salt);
    rng
}

/// AF-domain observation of one symbol after the time-domain channel, with
/// the clean and noise energies of the post-prefix samples.
pub struct Observation {
    pub y: CVector,
    pub signal_energy: f64,
    pub noise_energy: f64,
}

/// IDAFT, prefix, tapped-delay channel, white noise on the kept samples, DAFT.
pub fn observe_pilot<R: Rng + ?Sized>(
    modem: &Modem,
    ch: &ChannelRealization,
    x: &[Complex64],
    noise_var: f64,
    rng: &mut R,
) -> Result<Observation> {
    let cfg = *modem.config();
    let s = modem.add_cpp(&modem.idaft(x)?)?;
    let clean = apply_channel_time(&s, ch, &cfg, 0.0, rng)?;
    let mut kept = modem.remove_cpp(&clean)?;
    let signal_energy = norm_sq(&kept);
    let mut noise = vec![ZERO; kept.len()];
    if noise_var > 0.0 {
        add_awgn(&mut noise, noise_var, rng);
    }
    let noise_energy = norm_sq(&noise);
    for (k, w) in kept.iter_mut().zip(&noise) {
        *k += w;
    }
    Ok(Observation {
        y: CVector::from_vec(modem.daft(&kept)?),
        signal_energy,
        noise_energy,
    })
}

pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Injected versus nominal noise and the received signal power at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrCheck {
    pub snr_db: f64,
    pub nominal_noise_var: f64,
    pub measured_noise_var: f64,
    pub measured_signal_power: f64,
}

#[derive(Debug, Clone)]
pub struct UplinkReport {
    /// NMSE rows per estimator; `mmse_genie_pilot` and `bcrlb` are pilot-domain MSEs
    /// normalized by the clean pilot energy.
    pub nmse: ResultTable,
    /// Data BER after MMSE equalization with each channel estimate.
    pub ber: ResultTable,
    pub snr_checks: Vec<SnrCheck>,
    /// Trials excluded per estimator label (diverged or failed).
    pub excluded: Vec<(String, usize)>,
}

#[derive(Default, Clone)]
struct SnrTally {
    nmse: Vec<Option<f64>>,
    ber: Vec<Option<f64>>,
    signal_energy: f64,
    noise_energy: f64,
    samples: usize,
}

struct Plan {
    nmse_labels: Vec<String>,
    ber_labels: Vec<String>,
}

fn plan(cfg: &ExperimentConfig) -> Plan {
    let mut est = vec!["sbl".to_string()];
    if cfg.estimator.eta.is_some() {
        est.push("sbl_partial".into());
    }
    if cfg.estimator.omp {
        est.push("omp".into());
    }
    if cfg.estimator.mmse_genie {
        est.push("mmse_genie".into());
    }
    let mut nmse_labels = est.clone();
    if cfg.estimator.mmse_genie {
        nmse_labels.push("mmse_genie_pilot".into());
        nmse_labels.push("bcrlb".into());
    }
    let mut ber_labels = vec!["perfect".to_string()];
    ber_labels.extend(est);
    Plan {
        nmse_labels,
        ber_labels,
    }
}

struct Setup {
    modem: Modem,
    pilot: Vec<Complex64>,
    dict: Dictionary,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let afdm = cfg.afdm_config()?;
    let pilot = zc_pilot(afdm.n_subcarriers, cfg.estimator.zc_root)?;
    let dict = build_dictionary(&pilot, &afdm, cfg.channel.l_max, cfg.alpha_max(), cfg.estimator.grid)?;
    Ok(Setup {
        modem: Modem::new(afdm),
        pilot,
        dict,
    })
}

fn equalized_ber(est: &CMatrix, data: &[(Vec<usize>, CVector)], noise_var: f64, q: usize) -> Option<f64> {
    let mut errors = 0usize;
    let mut bits = 0usize;
    for (truth, y) in data {
        let x = mmse_equalize(y, est, noise_var).ok()?;
        let decided = psk_demodulate(x.as_slice(), q);
        errors += bit_errors(&decided, truth);
        bits += truth.len() * q.trailing_zeros() as usize;
    }
    Some(if bits == 0 { 0.0 } else { errors as f64 / bits as f64 })
}

fn uplink_trial(cfg: &ExperimentConfig, su: &Setup, plan: &Plan, trial: usize) -> Result<Vec<SnrTally>> {
    let afdm = *su.modem.config();
    let n = afdm.n_subcarriers;
    let q = afdm.psk_order;
    let ch = cfg.channel_model().sample(&mut trial_rng(cfg.seed, trial, 0))?;
    let h_true = effective_channel(&ch, &afdm);
    let hyper = cfg.sbl_hyper(Combination::All);
    let pilot_clean = &h_true * CVector::from_column_slice(&su.pilot);
    let pilot_energy = pilot_clean.norm_squared();

    let mut out = Vec::with_capacity(cfg.sweep.snr_db.len());
    for (i, &snr) in cfg.sweep.snr_db.iter().enumerate() {
        let mut rng = trial_rng(cfg.seed, trial, 1 + i as u64);
        let nv = noise_variance(snr);
        let mut tally = SnrTally::default();

        let obs = observe_pilot(&su.modem, &ch, &su.pilot, nv, &mut rng)?;
        tally.signal_energy += obs.signal_energy;
        tally.noise_energy += obs.noise_energy;
        tally.samples += n;
        let y = obs.y;

        let mut data = Vec::with_capacity(cfg.estimator.frame_len.saturating_sub(1));
        for _ in 1..cfg.estimator.frame_len {
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
            let x: Vec<Complex64> = idx.iter().map(|&k| psk_point(k, q)).collect();
            let o = observe_pilot(&su.modem, &ch, &x, nv, &mut rng)?;
            tally.signal_energy += o.signal_energy;
            tally.noise_energy += o.noise_energy;
            tally.samples += n;
            data.push((idx, o.y));
        }

        let mut estimates: Vec<Option<CMatrix>> = Vec::new();
        let sbl = sbl_estimate(&y, &su.dict, &hyper).ok();
        estimates.push(sbl.as_ref().and_then(|o| su.dict.reconstruct(&o.h).ok()));
        if let Some(keep) = cfg.partial_keep() {
            estimates.push(
                sbl.as_ref()
                    .and_then(|o| su.dict.reconstruct(&keep_strongest(&o.state.mu, keep)).ok()),
            );
        }
        if cfg.estimator.omp {
            let k = cfg.estimator.omp_sparsity.unwrap_or(cfg.channel.paths);
            estimates.push(
                omp_estimate(&y, &su.dict, k)
                    .ok()
                    .and_then(|h| su.dict.reconstruct(&h).ok()),
            );
        }
        let mut genie_rows = Vec::new();
        if cfg.estimator.mmse_genie {
            let r_h = CMatrix::from_diagonal(&genie_prior(&su.dict, &ch).map(|v| Complex64::new(v, 0.0)));
            let r_w = CMatrix::from_diagonal_element(n, n, Complex64::new(nv, 0.0));
            let h_hat: Option<DVector<Complex64>> = mmse_estimate(&y, &su.dict.phi, &r_h, &r_w).ok();
            estimates.push(h_hat.as_ref().and_then(|h| su.dict.reconstruct(h).ok()));
            let pilot_mse = h_hat.map(|h| (&su.dict.phi * h - &pilot_clean).norm_squared() / pilot_energy);
            let bound = bcrlb(&su.dict.phi, &r_h, &r_w).ok().map(|b| b / pilot_energy);
            genie_rows = vec![pilot_mse, bound];
        }

        for est in &estimates {
            tally.nmse.push(est.as_ref().and_then(|e| nmse_ratio(e, &h_true).ok()));
        }
        tally.nmse.extend(genie_rows);
        debug_assert_eq!(tally.nmse.len(), plan.nmse_labels.len());

        tally.ber.push(equalized_ber(&h_true, &data, nv, q));
        for est in &estimates {
            tally
                .ber
                .push(est.as_ref().and_then(|e| equalized_ber(e, &data, nv, q)));
        }
        debug_assert_eq!(tally.ber.len(), plan.ber_labels.len());
        out.push(tally);
    }
    Ok(out)
}

fn db_row(snr_db: f64, label: &str, acc: &MeanAccumulator) -> ResultRow {
    let mean = acc.mean();
    let stderr = if mean > 0.0 {
        10.0 / LN_10 * acc.stderr() / mean
    } else {
        0.0
    };
    ResultRow {
        snr_db,
        label: label.to_string(),
        mean: ratio_to_db(mean),
        stderr,
        trials: acc.count,
    }
}

fn linear_row(snr_db: f64, label: &str, acc: &MeanAccumulator) -> ResultRow {
    ResultRow {
        snr_db,
        label: label.to_string(),
        mean: acc.mean(),
        stderr: acc.stderr(),
        trials: acc.count,
    }
}

pub(crate) const SNR_NOTE: &str =
    "snr_db: unit average transmit power per sample over complex noise variance 10^(-snr_db/10)";

/// Runs every trial, then reduces the per-trial results in trial order.
pub fn run_uplink_sweep(cfg: &ExperimentConfig) -> Result<UplinkReport> {
    cfg.validate()?;
    let su = setup(cfg)?;
    let plan = plan(cfg);
    let results = run_trials(cfg.trials, cfg.parallelism, |t| uplink_trial(cfg, &su, &plan, t));

    let snrs = &cfg.sweep.snr_db;
    let mut nmse_acc = vec![vec![MeanAccumulator::default(); plan.nmse_labels.len()]; snrs.len()];
    let mut ber_acc = vec![vec![MeanAccumulator::default(); plan.ber_labels.len()]; snrs.len()];
    let mut energy = vec![(0.0f64, 0.0f64, 0usize); snrs.len()];
    let mut excluded = vec![0usize; plan.nmse_labels.len()];
    let mut failed_trials = 0usize;
    for trial in results {
        let Ok(per_snr) = trial else {
            failed_trials += 1;
            continue;
        };
        for (i, tally) in per_snr.iter().enumerate() {
            for (j, v) in tally.nmse.iter().enumerate() {
                match v {
                    Some(r) => nmse_acc[i][j].push(*r),
                    None => excluded[j] += 1,
                }
            }
            for (j, v) in tally.ber.iter().enumerate() {
                if let Some(b) = v {
                    ber_acc[i][j].push(*b);
                }
            }
            energy[i].0 += tally.signal_energy;
            energy[i].1 += tally.noise_energy;
            energy[i].2 += tally.samples;
        }
    }
    if failed_trials == cfg.trials {
        return Err(crate::Error::Numerical("every uplink trial failed".into()));
    }

    let mut nmse = ResultTable::new("estimator", "nmse_db");
    let mut ber = ResultTable::new("estimator", "ber");
    let mut snr_checks = Vec::new();
    for (i, &snr) in snrs.iter().enumerate() {
        for (j, label) in plan.nmse_labels.iter().enumerate() {
            nmse.rows.push(db_row(snr, label, &nmse_acc[i][j]));
        }
        for (j, label) in plan.ber_labels.iter().enumerate() {
            ber.rows.push(linear_row(snr, label, &ber_acc[i][j]));
        }
        let (sig, noise, count) = energy[i];
        snr_checks.push(SnrCheck {
            snr_db: snr,
            nominal_noise_var: noise_variance(snr),
            measured_noise_var: noise / count.max(1) as f64,
            measured_signal_power: sig / count.max(1) as f64,
        });
    }

    let excluded: Vec<(String, usize)> = plan.nmse_labels.iter().cloned().zip(excluded).collect();
    for table in [&mut nmse, &mut ber] {
        table.notes.push(SNR_NOTE.into());
        table.notes.push(format!(
            "trials configured: {}, failed before estimation: {failed_trials}",
            cfg.trials
        ));
    }
    nmse.notes
        .push("mmse_genie_pilot and bcrlb: pilot-domain error |Phi h_hat - H p|^2 normalized by |H p|^2".into());
    let total = cfg.trials * snrs.len();
    for (label, count) in &excluded {
        if *count > 0 {
            let flag = if *count * 100 >= total {
                " (FLAGGED: at least 1%)"
            } else {
                ""
            };
            nmse.notes.push(format!("excluded {label}: {count} of {total}{flag}"));
        }
    }
    for c in &snr_checks {
        nmse.notes.push(format!(
            "snr {} dB: nominal noise variance {:.6e}, measured {:.6e}, received signal power {:.6}",
            c.snr_db, c.nominal_noise_var, c.measured_noise_var, c.measured_signal_power
        ));
    }
    Ok(UplinkReport {
        nmse,
        ber,
        snr_checks,
        excluded,
    })
}
