mod common;

use censored_kalman::bench::{run_experiment, ExperimentConfig};
use censored_kalman::{Execution, FilterVariant};

use common::config_path;

#[test]
fn checked_in_configs_parse() {
    for name in ["table2.toml", "table3.toml"] {
        let cfg = ExperimentConfig::load(&config_path(name)).unwrap();
        assert_eq!(cfg.replications, 100);
        assert_eq!(cfg.steps, 1000);
        assert_eq!(cfg.oscillator.r2, 0.5);
        assert!(cfg.estimation.enabled);
    }
}

#[test]
fn censored_filter_beats_kalman_per_replication() {
    let mut cfg = ExperimentConfig::load(&config_path("table2.toml")).unwrap();
    cfg.estimation.enabled = false;
    let report = run_experiment(&cfg, Execution::Parallel).unwrap();
    let ckf = &report.variant(FilterVariant::Censored).unwrap().per_replication;
    let kf = &report.variant(FilterVariant::Kalman).unwrap().per_replication;
    let wins = ckf.iter().zip(kf).filter(|(c, k)| c.iter().zip(k.iter()).all(|(a, b)| a < b)).count();
    assert!(wins >= 95, "CKF better in {wins} of 100");
}

#[test]
fn wide_limits_make_variants_agree() {
    let mut cfg = ExperimentConfig::damped_oscillator(61);
    cfg.replications = 5;
    cfg.censoring.lower = -1e6;
    cfg.censoring.upper = 1e6;
    let report = run_experiment(&cfg, Execution::Parallel).unwrap();
    let kf = &report.variant(FilterVariant::Kalman).unwrap().mean_rmse;
    for v in &report.variants {
        for (a, b) in v.mean_rmse.iter().zip(kf) {
            assert!((a - b).abs() <= 1e-6);
        }
    }
    assert!(report.censored_fraction.iter().all(|&f| f == 0.0));
}

#[test]
fn report_is_independent_of_execution_mode() {
    let mut cfg = ExperimentConfig::damped_oscillator(62);
    cfg.replications = 6;
    cfg.steps = 300;
    cfg.estimation.enabled = true;
    cfg.estimation.bounds = Some([0.01, 10.0]);
    let par = run_experiment(&cfg, Execution::Parallel).unwrap().without_timings();
    let seq = run_experiment(&cfg, Execution::Sequential).unwrap().without_timings();
    assert_eq!(par.to_json().unwrap(), seq.to_json().unwrap());
    let again = run_experiment(&cfg, Execution::Parallel).unwrap().without_timings();
    assert_eq!(par.to_json().unwrap(), again.to_json().unwrap());
}
