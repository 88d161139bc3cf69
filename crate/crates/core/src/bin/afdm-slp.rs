use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;

use afdm_slp::afdm::{psk_point, Modem};
use afdm_slp::channel::effective_channel;
use afdm_slp::sbl::{build_dictionary, sbl_estimate, trace_csv, Combination};
use afdm_slp::selftest::run_selftest;
use afdm_slp::sim::{
    line_plot_svg, nmse_db, observe_pilot, run_downlink_sweep, run_uplink_sweep, trial_rng, zc_pilot, ExperimentConfig,
};
use afdm_slp::slp::{build_precode_problem, slp_precode, PrecodeDiagnostic};
use afdm_slp::Error;

#[derive(Parser)]
#[command(
    name = "afdm-slp",
    version,
    about = "AFDM uplink SBL estimation and downlink symbol-level precoding"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; built-in defaults (same as configs/table1.json) when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, value_name = "N")]
    parallelism: Option<usize>,
    /// Also write SVG line plots next to the CSVs.
    #[arg(long, global = true)]
    emit_svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one random channel from a pilot and write the SBL trace.
    Estimate {
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
    },
    /// Precode one random symbol vector and write the (T, delta, w, t) record.
    Precode {
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
    },
    /// NMSE and BER of every estimator across the configured SNRs.
    SweepUplink,
    /// Downlink BER of SLP and MMSE precoding for each CSI source.
    SweepDownlink,
    /// Cross-check fast paths against reference implementations.
    Selftest,
}

enum Failure {
    MissingConfig(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) if !path.is_file() => {
            return Err(Failure::MissingConfig(format!(
                "config file not found: {}",
                path.display()
            )))
        }
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
    }
    if let Some(p) = common.parallelism {
        cfg.parallelism = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn estimate(cfg: &ExperimentConfig, common: &Common, snr_db: f64) -> Result<(), Failure> {
    let afdm = cfg.afdm_config()?;
    let modem = Modem::new(afdm);
    let ch = cfg.channel_model().sample(&mut trial_rng(cfg.seed, 0, 0))?;
    let pilot = zc_pilot(afdm.n_subcarriers, cfg.estimator.zc_root)?;
    let dict = build_dictionary(&pilot, &afdm, cfg.channel.l_max, cfg.alpha_max(), cfg.estimator.grid)?;
    let nv = 10f64.powf(-snr_db / 10.0);
    let y = observe_pilot(&modem, &ch, &pilot, nv, &mut trial_rng(cfg.seed, 0, 1))?.y;
    let out = sbl_estimate(&y, &dict, &cfg.sbl_hyper(Combination::All))?;
    let est = dict.reconstruct(&out.h)?;
    let nmse = nmse_db(&est, &effective_channel(&ch, &afdm))?;
    write(&common.out, "channel.json", &ch.to_json())?;
    write(&common.out, "sbl_trace.csv", &trace_csv(&out.trace))?;
    println!(
        "snr {snr_db} dB: {} atoms, {} iterations (converged: {}), nmse {nmse:.2} dB",
        dict.len(),
        out.trace.len(),
        out.converged
    );
    Ok(())
}

fn precode(cfg: &ExperimentConfig, common: &Common, snr_db: f64) -> Result<(), Failure> {
    let afdm = cfg.afdm_config()?;
    let modem = Modem::new(afdm);
    let (n, q) = (afdm.n_subcarriers, afdm.psk_order);
    let mut rng = trial_rng(cfg.seed, 0, 0);
    let ch = cfg.channel_model().sample(&mut rng)?;
    let h = effective_channel(&ch, &afdm);
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
    let s: Vec<Complex64> = idx.iter().map(|&k| psk_point(k, q)).collect();
    let problem = build_precode_problem(&h, &s, q, cfg.power())?;
    let sol = slp_precode(&h, &s, q, cfg.power(), &cfg.qp_options())?;
    let nv = 10f64.powf(-snr_db / 10.0);
    let y = observe_pilot(&modem, &ch, &sol.x, nv, &mut trial_rng(cfg.seed, 0, 1))?.y;
    let mut csv = String::from("re,im,symbol_index\n");
    for (v, k) in y.iter().zip(&idx) {
        csv.push_str(&format!("{},{},{}\n", v.re, v.im, k));
    }
    write(&common.out, "channel.json", &ch.to_json())?;
    write(
        &common.out,
        "precode.json",
        &PrecodeDiagnostic::new(&problem.t_matrix, &sol).to_json(),
    )?;
    write(&common.out, "constellation.csv", &csv)?;
    println!(
        "margin t = {:.6}, {} iterations (converged: {})",
        sol.margin, sol.iterations, sol.converged
    );
    Ok(())
}

fn sweep_uplink(cfg: &ExperimentConfig, common: &Common) -> Result<(), Failure> {
    let report = run_uplink_sweep(cfg)?;
    write(&common.out, "uplink_nmse.csv", &report.nmse.to_csv())?;
    write(&common.out, "uplink_ber.csv", &report.ber.to_csv())?;
    if common.emit_svg {
        write(
            &common.out,
            "uplink_nmse.svg",
            &line_plot_svg(&report.nmse, "NMSE (dB)", false),
        )?;
        write(&common.out, "uplink_ber.svg", &line_plot_svg(&report.ber, "BER", true))?;
    }
    Ok(())
}

fn sweep_downlink(cfg: &ExperimentConfig, common: &Common) -> Result<(), Failure> {
    let report = run_downlink_sweep(cfg)?;
    write(&common.out, "downlink_ber.csv", &report.ber.to_csv())?;
    for c in &report.constellations {
        write(&common.out, &format!("constellation_snr{}.csv", c.snr_db), &c.to_csv())?;
    }
    if common.emit_svg {
        write(
            &common.out,
            "downlink_ber.svg",
            &line_plot_svg(&report.ber, "BER", true),
        )?;
    }
    if report.unconverged > 0 {
        eprintln!(
            "warning: {} of {} precoding calls stopped at the iteration cap",
            report.unconverged, report.precode_calls
        );
    }
    Ok(())
}

fn selftest(cfg: &ExperimentConfig) -> Result<bool, Failure> {
    let checks = run_selftest(cfg.seed);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let cfg = load_config(&cli.common)?;
    match &cli.command {
        Command::Estimate { snr_db } => estimate(&cfg, &cli.common, *snr_db).map(|_| true),
        Command::Precode { snr_db } => precode(&cfg, &cli.common, *snr_db).map(|_| true),
        Command::SweepUplink => sweep_uplink(&cfg, &cli.common).map(|_| true),
        Command::SweepDownlink => sweep_downlink(&cfg, &cli.common).map(|_| true),
        Command::Selftest => selftest(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Failure::MissingConfig(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
