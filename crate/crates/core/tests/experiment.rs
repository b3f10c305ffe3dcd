use std::path::PathBuf;

use karmic_core::experiment::{
    fit_loglog_points, fit_loglog_slope, run_rate_experiment, write_outputs, EstimatorConfig, ExperimentConfig, ModelConfig,
    RateTable,
};
use karmic_core::plugin::TolerancePolicy;
use karmic_core::threshold::default_tolerance;
use karmic_core::EvalMode;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small(estimator: EstimatorConfig, metric: &str) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig::Gaussian { mu: vec![2.0, 0.0], kappa: 0.5 },
        metric: metric.into(),
        estimator,
        n_list: vec![256, 1024, 4096],
        seeds: 6,
        base_seed: 11,
        tolerance: TolerancePolicy::default(),
        evaluation: None,
        output: None,
        threads: None,
    }
}

#[test]
fn shipped_configs_parse() {
    for name in ["rate_gaussian_f1.toml", "rate_holder_f1.toml"] {
        let cfg = ExperimentConfig::load(configs_dir().join(name)).unwrap();
        assert_eq!(cfg.seeds, 50);
        assert_eq!(cfg.n_list.len(), 7);
    }
}

#[test]
fn log_n_over_n_reference_slope() {
    let ns: Vec<usize> = (8..=14).map(|k| 1usize << k).collect();
    let pts: Vec<(usize, f64)> = ns.iter().map(|&n| (n, (n as f64).ln() / n as f64)).collect();
    // independent OLS: log(log n / n) = log log n - log n
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.ln() - x).collect();
    let mx = xs.iter().sum::<f64>() / 7.0;
    let my = ys.iter().sum::<f64>() / 7.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let fit = fit_loglog_points(&pts).unwrap();
    assert!((fit.slope - slope).abs() < 1e-12);
    assert!((fit.slope + 0.87).abs() < 0.01, "{}", fit.slope);
}

#[test]
fn true_eta_accuracy_has_negligible_regret() {
    // at n = 256 the bracket width ln n₂/n₂ alone leaves regret near 1e-4
    let mut cfg = small(EstimatorConfig::TrueEta, "accuracy");
    cfg.n_list = vec![1024, 4096, 16384];
    let table = run_rate_experiment(&cfg).unwrap();
    assert_eq!(table.failed_rows(), 0);
    for r in &table.rows {
        assert!(r.regret.unwrap() <= 1e-4, "n {} seed {}: {:?}", r.n, r.seed, r.regret);
    }
}

#[test]
fn rows_tolerances_and_aggregates() {
    let cfg = small(EstimatorConfig::Logistic, "fbeta:1");
    let table = run_rate_experiment(&cfg).unwrap();
    assert_eq!(table.rows.len(), 3 * 6);
    for &n in &cfg.n_list {
        let mut seeds: Vec<usize> = table.rows.iter().filter(|r| r.n == n).map(|r| r.seed).collect();
        seeds.sort_unstable();
        assert_eq!(seeds, (0..6).collect::<Vec<_>>());
    }
    for r in &table.rows {
        assert_eq!(r.tolerance, Some(default_tolerance(r.n - r.n / 2)));
        assert!(r.regret.unwrap() >= -1e-12);
    }
    // aggregates are a function of the rows alone
    let rebuilt = RateTable::from_rows(table.rows.clone());
    assert_eq!(rebuilt.aggregates, table.aggregates);
    for a in &table.aggregates {
        let mut r: Vec<f64> = table.rows.iter().filter(|x| x.n == a.n).filter_map(|x| x.regret).collect();
        r.sort_by(f64::total_cmp);
        assert_eq!(a.median_regret, 0.5 * (r[2] + r[3]));
        assert!(a.q1 <= a.median_regret && a.median_regret <= a.q3);
    }
}

#[test]
fn outputs_are_written_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(EstimatorConfig::Logistic, "fbeta:1");
    cfg.evaluation = Some(EvalMode::ClosedForm);
    cfg.threads = Some(1);
    let a = run_rate_experiment(&cfg).unwrap();
    cfg.threads = Some(4);
    let b = run_rate_experiment(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());

    let paths = write_outputs(&cfg, &a, &dir.path().join("nested/run")).unwrap();
    let csv = std::fs::read_to_string(&paths.table).unwrap();
    assert!(csv.starts_with("n,seed,data_seed,tolerance,delta_star,delta_hat,u_star,u_hat,regret,status\n"));
    assert_eq!(csv.lines().count(), 1 + a.rows.len());
    assert_eq!(std::fs::read_to_string(&paths.timing).unwrap().lines().count(), 1 + a.rows.len());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths.summary).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    let slope = summary["slope"].as_f64().unwrap();
    assert!((slope - fit_loglog_slope(&a).unwrap().slope).abs() < 1e-15);
    assert_eq!(summary["aggregates"].as_array().unwrap().len(), 3);
}

#[test]
fn holder_config_defaults_to_quadrature() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        metric = "accuracy"
        n_list = [512, 1024, 2048]
        seeds = 2
        [model]
        kind = "holder"
        beta = 1.0
        [estimator]
        kind = "kernel"
        beta = 1.0
        "#,
    )
    .unwrap();
    assert!(matches!(cfg.evaluation_mode(), EvalMode::Quadrature { .. }));
    let table = run_rate_experiment(&cfg).unwrap();
    assert_eq!(table.failed_rows(), 0);
}
