use std::fs;
use std::process::Command;

use fcm_crlb::harness::experiments::{run_eig_fit, run_histograms, run_sir_scan};
use fcm_crlb::harness::{run_to_csv, ExperimentConfig, ExperimentKind, ProfileChoice};
use fcm_crlb::Error;

const BIN: &str = env!("CARGO_BIN_EXE_fcm-crlb");

#[test]
fn config_round_trips_through_toml() {
    for kind in ExperimentKind::ALL {
        let cfg = ExperimentConfig::defaults(kind);
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text, None).unwrap();
        assert_eq!(back, cfg, "{kind}");
        assert_eq!(back.config_hash().unwrap(), cfg.config_hash().unwrap());
    }
}

#[test]
fn config_overlays_defaults_and_rejects_unknown_keys() {
    let cfg = ExperimentConfig::from_toml_str(
        "experiment = \"mse-vs-nt\"\nn_tones = 24\nprofile = \"ETU\"\nmode = \"waveform\"\n",
        None,
    )
    .unwrap();
    assert_eq!(cfg.n_tones, 24);
    assert_eq!(cfg.snr_db, 20.0);
    assert_eq!(cfg.mode.as_str(), "waveform");
    assert!(matches!(
        ExperimentConfig::from_toml_str("experiment = \"eig-fit\"\nbogus = 1\n", None),
        Err(Error::Config(_))
    ));
    assert!(ExperimentConfig::from_toml_str("n_tones = 8\n", None).is_err());
    assert!(ExperimentConfig::from_toml_str(
        "experiment = \"eig-fit\"\n",
        Some(ExperimentKind::SirScan)
    )
    .is_err());
    assert!(
        ExperimentConfig::from_toml_str("experiment = \"histograms\"\nn_trials = 0\n", None)
            .is_err()
    );
}

#[test]
fn custom_profile_in_config() {
    let cfg = ExperimentConfig::from_toml_str(
        "experiment = \"sir-scan\"\n[profile]\nname = \"flat2\"\ndelays_ns = [0.0, 1000.0]\npowers_db = [0.0, 0.0]\n",
        None,
    )
    .unwrap();
    assert!(matches!(cfg.profile, ProfileChoice::Custom(_)));
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text, None).unwrap(), cfg);
}

#[test]
fn hash_ignores_output_path_but_not_seed() {
    let mut a = ExperimentConfig::defaults(ExperimentKind::EigFit);
    let h = a.config_hash().unwrap();
    a.out_path = Some("somewhere.csv".into());
    assert_eq!(a.config_hash().unwrap(), h);
    a.master_seed += 1;
    assert_ne!(a.config_hash().unwrap(), h);
    assert_eq!(h.len(), 16);
}

#[test]
fn full_scale_switches_tone_count() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Histograms);
    cfg.apply_full_scale();
    assert_eq!((cfg.n_tones, cfg.n_trials), (128, 10_000));
    let mut fit = ExperimentConfig::defaults(ExperimentKind::EigFit);
    fit.apply_full_scale();
    assert_eq!(fit, ExperimentConfig::defaults(ExperimentKind::EigFit));
}

#[test]
fn eig_fit_static_row_and_scaling() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::EigFit);
    cfg.n_grid = vec![64, 128];
    cfg.fdts_list = vec![0.0, 0.2];
    let rows = run_eig_fit(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].rel_dev < 1e-14);
    assert!((rows[3].lambda_fit - 2.0 * rows[1].lambda_fit).abs() < 1e-12);
}

#[test]
fn histogram_values_are_nonnegative() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Histograms);
    cfg.n_tones = 8;
    cfg.n_trials = 20;
    cfg.n_t_list = vec![20];
    let rows = run_histograms(&cfg).unwrap();
    assert_eq!(rows.len(), 9 * 20);
    assert!(rows.iter().all(|r| r.avgmse >= 0.0));
}

#[test]
fn sir_scan_reports_infinite_for_static() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::SirScan);
    cfg.n_tones = 32;
    cfg.n_trials = 100;
    cfg.fdts_list = vec![0.0, 0.02, 0.1];
    let rows = run_sir_scan(&cfg).unwrap();
    assert_eq!(rows[0].sir_db, f64::INFINITY);
    assert!(rows[1].sir_db > rows[2].sir_db);
}

#[test]
fn csv_layout_and_worker_independence() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::MseVsNt);
    cfg.n_tones = 8;
    cfg.n_trials = 30;
    cfg.n_t_list = vec![10, 20];
    let one = run_to_csv(&cfg, 1).unwrap();
    assert_eq!(one, run_to_csv(&cfg, 3).unwrap());
    let text = String::from_utf8(one).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# experiment=mse-vs-nt config_hash="));
    assert!(comment.ends_with(&format!("master_seed={}", cfg.master_seed)));
    assert_eq!(lines.next().unwrap(), "N_t,avgmse_empirical,avgmse_lb,mode");
    assert_eq!(lines.count(), 2);
}

#[test]
fn cli_writes_csv_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("fit.toml");
    let out = dir.path().join("fit.csv");
    fs::write(&config, "n_grid = [32]\nfdts_list = [0.0, 0.1]\n").unwrap();
    let status = Command::new(BIN)
        .args(["eig-fit", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "7", "--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().ends_with("master_seed=7"));
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "N,fdts,lambda_numeric,lambda_fit,rel_dev"
    );
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn cli_prints_config_and_rejects_bad_input() {
    let printed = Command::new(BIN)
        .args([
            "histograms",
            "--paper-scale",
            "--mode",
            "waveform",
            "--print-config",
        ])
        .output()
        .unwrap();
    assert!(printed.status.success());
    let cfg = ExperimentConfig::from_toml_str(std::str::from_utf8(&printed.stdout).unwrap(), None)
        .unwrap();
    assert_eq!(cfg.n_tones, 128);
    assert_eq!(cfg.mode.as_str(), "waveform");

    let bad = Command::new(BIN).arg("not-an-experiment").output().unwrap();
    assert!(!bad.status.success());

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "typo_key = 3\n").unwrap();
    let bad = Command::new(BIN)
        .args(["sir-scan", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("typo_key"));
}
