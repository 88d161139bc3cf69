//! Downlink sweep: the base station precodes with its CSI, the user decides
//! PSK symbols directly from the received AF-domain samples.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::afdm::{psk_decide, psk_point, Modem};
use crate::channel::{effective_channel, truncated_channel, ChannelRealization};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par::run_trials;
use crate::sbl::{build_dictionary, sbl_estimate, Combination};
use crate::slp::{mmse_precode, slp_precode};

use super::metrics::{bit_errors, MeanAccumulator};
use super::output::{ResultRow, ResultTable};
use super::uplink::{noise_variance, observe_pilot, trial_rng, SNR_NOTE};
use super::{zc_pilot, CsiSource, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstellationPoint {
    pub re: f64,
    pub im: f64,
    pub symbol_index: usize,
}

/// Received SLP points at one SNR under perfect CSI.
#[derive(Debug, Clone)]
pub struct Constellation {
    pub snr_db: f64,
    pub points: Vec<ConstellationPoint>,
}

impl Constellation {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,symbol_index\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.re, p.im, p.symbol_index));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DownlinkReport {
    /// BER rows labelled `{slp|mmse}_{csi}`.
    pub ber: ResultTable,
    pub constellations: Vec<Constellation>,
    /// Precoding calls that hit the iteration cap before the tolerance.
    pub unconverged: usize,
    pub precode_calls: usize,
    /// Largest relative deviation of `‖x‖²` from `P_m` over all SLP calls.
    pub worst_power_error: f64,
}

const SLOT_SALT: u64 = 1;
const PILOT_SALT: u64 = 1 << 12;

#[derive(Default)]
struct Cell {
    errors: usize,
    bits: usize,
    failed: bool,
}

struct TrialOut {
    /// `[snr][label]`
    cells: Vec<Vec<Cell>>,
    points: Vec<Vec<ConstellationPoint>>,
    unconverged: usize,
    calls: usize,
    worst_power_error: f64,
}

fn labels(cfg: &ExperimentConfig) -> Vec<(CsiSource, bool)> {
    let mut out = Vec::new();
    for csi in &cfg.precoder.csi {
        out.push((*csi, true));
        if cfg.precoder.mmse_baseline {
            out.push((*csi, false));
        }
    }
    out
}

fn label_name(csi: CsiSource, slp: bool) -> String {
    format!("{}_{}", if slp { "slp" } else { "mmse" }, csi.label())
}

fn receive<R: Rng + ?Sized>(
    modem: &Modem,
    ch: &ChannelRealization,
    x: &[Complex64],
    nv: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    Ok(observe_pilot(modem, ch, x, nv, rng)?.y.iter().copied().collect())
}

fn downlink_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialOut> {
    let afdm = cfg.afdm_config()?;
    let modem = Modem::new(afdm);
    let n = afdm.n_subcarriers;
    let q = afdm.psk_order;
    let power = cfg.power();
    let qp = cfg.qp_options();
    let ch = cfg.channel_model().sample(&mut trial_rng(cfg.seed, trial, 0))?;
    let h_true = effective_channel(&ch, &afdm);
    let plan = labels(cfg);
    let needs_estimate = cfg.precoder.csi.contains(&CsiSource::Estimated);
    let estimator = if needs_estimate {
        let pilot = zc_pilot(n, cfg.estimator.zc_root)?;
        let dict = build_dictionary(&pilot, &afdm, cfg.channel.l_max, cfg.alpha_max(), cfg.estimator.grid)?;
        Some((pilot, dict))
    } else {
        None
    };
    let record = trial < cfg.precoder.constellation_trials;

    let mut out = TrialOut {
        cells: Vec::new(),
        points: Vec::new(),
        unconverged: 0,
        calls: 0,
        worst_power_error: 0.0,
    };
    for (i, &snr) in cfg.sweep.snr_db.iter().enumerate() {
        let nv = noise_variance(snr);
        let base = trial_rng(cfg.seed, trial, SLOT_SALT + i as u64);
        let estimate = match &estimator {
            Some((pilot, dict)) => {
                let mut rng = trial_rng(cfg.seed, trial, PILOT_SALT + i as u64);
                let y = observe_pilot(&modem, &ch, pilot, nv, &mut rng)?.y;
                sbl_estimate(&y, dict, &cfg.sbl_hyper(Combination::All))
                    .and_then(|o| dict.reconstruct(&o.h))
                    .ok()
            }
            None => None,
        };
        let capture = record && cfg.precoder.constellation_snr_db.contains(&snr);
        let mut points = Vec::new();
        let mut row: Vec<Cell> = plan.iter().map(|_| Cell::default()).collect();
        for (j, &(csi, slp)) in plan.iter().enumerate() {
            let h_csi: Option<CMatrix> = match csi {
                CsiSource::Perfect => Some(h_true.clone()),
                CsiSource::Estimated => estimate.clone(),
                CsiSource::Truncated(k) => Some(truncated_channel(&ch, &afdm, k)),
            };
            let Some(h_csi) = h_csi else {
                row[j].failed = true;
                continue;
            };
            // same symbols and noise for every CSI source and precoder
            let mut rng = base.clone();
            for _ in 0..cfg.precoder.symbols_per_trial {
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
                let s: Vec<Complex64> = idx.iter().map(|&k| psk_point(k, q)).collect();
                let x = if slp {
                    match slp_precode(&h_csi, &s, q, power, &qp) {
                        Ok(sol) => {
                            out.calls += 1;
                            if !sol.converged {
                                out.unconverged += 1;
                            }
                            let p: f64 = sol.x.iter().map(|v| v.norm_sqr()).sum();
                            out.worst_power_error = out.worst_power_error.max((p - power).abs() / power);
                            sol.x
                        }
                        Err(Error::Infeasible(_)) | Err(Error::Numerical(_)) => {
                            row[j].failed = true;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                } else {
                    match mmse_precode(&h_csi, &s, power, nv) {
                        Ok(x) => x,
                        Err(_) => {
                            row[j].failed = true;
                            break;
                        }
                    }
                };
                let y = receive(&modem, &ch, &x, nv, &mut rng)?;
                let decided: Vec<usize> = y.iter().map(|v| psk_decide(*v, q)).collect();
                row[j].errors += bit_errors(&decided, &idx);
                row[j].bits += n * q.trailing_zeros() as usize;
                if capture && slp && csi == CsiSource::Perfect {
                    points.extend(y.iter().zip(&idx).map(|(v, &k)| ConstellationPoint {
                        re: v.re,
                        im: v.im,
                        symbol_index: k,
                    }));
                }
            }
        }
        out.cells.push(row);
        out.points.push(points);
    }
    Ok(out)
}

/// Runs every trial and reduces in trial order.
pub fn run_downlink_sweep(cfg: &ExperimentConfig) -> Result<DownlinkReport> {
    cfg.validate()?;
    let plan = labels(cfg);
    let results = run_trials(cfg.trials, cfg.parallelism, |t| downlink_trial(cfg, t));
    let snrs = &cfg.sweep.snr_db;
    let mut acc = vec![vec![MeanAccumulator::default(); plan.len()]; snrs.len()];
    let mut excluded = vec![0usize; plan.len()];
    let mut points: Vec<Vec<ConstellationPoint>> = vec![Vec::new(); snrs.len()];
    let (mut unconverged, mut calls, mut worst) = (0usize, 0usize, 0.0f64);
    for r in results {
        let r = r?;
        unconverged += r.unconverged;
        calls += r.calls;
        worst = worst.max(r.worst_power_error);
        for (i, row) in r.cells.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if cell.failed || cell.bits == 0 {
                    excluded[j] += 1;
                } else {
                    acc[i][j].push(cell.errors as f64 / cell.bits as f64);
                }
            }
        }
        for (i, p) in r.points.into_iter().enumerate() {
            points[i].extend(p);
        }
    }

    let mut ber = ResultTable::new("scheme", "ber");
    for (i, &snr) in snrs.iter().enumerate() {
        for (j, &(csi, slp)) in plan.iter().enumerate() {
            let a = &acc[i][j];
            ber.rows.push(ResultRow {
                snr_db: snr,
                label: label_name(csi, slp),
                mean: a.mean(),
                stderr: a.stderr(),
                trials: a.count,
            });
        }
    }
    ber.notes.push(SNR_NOTE.into());
    ber.notes.push(format!(
        "symbols per trial: {}, subcarriers: {}, psk order: {}",
        cfg.precoder.symbols_per_trial, cfg.afdm.n_subcarriers, cfg.afdm.psk_order
    ));
    let total = cfg.trials * snrs.len();
    for (j, &(csi, slp)) in plan.iter().enumerate() {
        if excluded[j] > 0 {
            let flag = if excluded[j] * 100 >= total {
                " (FLAGGED: at least 1%)"
            } else {
                ""
            };
            ber.notes.push(format!(
                "excluded {}: {} of {total}{flag}",
                label_name(csi, slp),
                excluded[j]
            ));
        }
    }
    ber.notes
        .push(format!("slp calls: {calls}, unconverged: {unconverged}"));

    let constellations = snrs
        .iter()
        .zip(points)
        .filter(|(s, p)| cfg.precoder.constellation_snr_db.contains(s) && !p.is_empty())
        .map(|(&snr_db, points)| Constellation { snr_db, points })
        .collect();
    Ok(DownlinkReport {
        ber,
        constellations,
        unconverged,
        precode_calls: calls,
        worst_power_error: worst,
    })
}
