use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_afdm-slp"))
}

const SMALL: &str = r#"{
  "trials": 3,
  "sweep": { "snr_db": [10.0, 30.0] },
  "precoder": { "csi": ["perfect", {"truncated": 1}], "constellation_snr_db": [30.0], "constellation_trials": 1 }
}"#;

#[test]
fn missing_config_exits_with_two() {
    let out = bin()
        .args(["--config", "/nonexistent/cfg.json", "selftest"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"trials\": 3,\n  \"seed\": ,\n}\n").unwrap();
    let out = bin().arg("--config").arg(&path).arg("selftest").output().unwrap();
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"trails\": 3\n}\n").unwrap();
    let out = bin().arg("--config").arg(&path).arg("selftest").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn sweeps_write_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    for cmd in ["sweep-uplink", "sweep-downlink", "estimate", "precode"] {
        let status = bin()
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .arg("--emit-svg")
            .arg(cmd)
            .status()
            .unwrap();
        assert!(status.success(), "{cmd}");
    }
    let header = |name: &str| {
        fs::read_to_string(out_dir.join(name))
            .unwrap()
            .lines()
            .find(|l| !l.starts_with('#'))
            .unwrap()
            .to_string()
    };
    assert_eq!(
        header("uplink_nmse.csv"),
        "snr_db,estimator,nmse_db_mean,nmse_db_stderr,trials"
    );
    assert_eq!(
        header("sbl_trace.csv"),
        "iteration,mu_norm,delta_alpha_sq,beta,lambda,nu"
    );
    assert_eq!(header("constellation.csv"), "re,im,symbol_index");
    assert_eq!(header("constellation_snr30.csv"), "re,im,symbol_index");
    assert!(out_dir.join("uplink_nmse.svg").exists());
    assert!(out_dir.join("downlink_ber.svg").exists());

    let ch: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("channel.json")).unwrap()).unwrap();
    let tap = &ch["taps"][0];
    for key in ["gain_re", "gain_im", "delay", "doppler"] {
        assert!(!tap[key].is_null(), "{key}");
    }
    let pre: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("precode.json")).unwrap()).unwrap();
    for key in ["t_matrix", "delta", "w", "t"] {
        assert!(!pre[key].is_null(), "{key}");
    }
}

#[test]
fn seed_and_trial_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let run = |seed: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let status = bin()
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", seed, "--trials", "2", "--parallelism", "1", "--out"])
            .arg(&out_dir)
            .arg("sweep-uplink")
            .status()
            .unwrap();
        assert!(status.success());
        fs::read_to_string(out_dir.join("uplink_nmse.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .all(|l| l.ends_with(",2")));
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn shipped_configs_load() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let table1 = afdm_slp::sim::ExperimentConfig::load(&std::path::Path::new(root).join("table1.json")).unwrap();
    assert_eq!(table1, afdm_slp::sim::ExperimentConfig::default());
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        afdm_slp::sim::ExperimentConfig::load(&path)
            .unwrap()
            .validate()
            .unwrap();
    }
}
