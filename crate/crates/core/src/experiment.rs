//! Convergence-rate harness: for every `(n, seed)` draw a dataset, train the
//! plug-in classifier and record its population regret, then fit the log-log
//! slope of median regret against `n`.
//!
//! Config files are TOML:
//!
//! ```toml
//! metric = "fbeta:1"
//! n_list = [256, 512, 1024]
//! seeds = 50
//! base_seed = 1          # optional, default 0
//! tolerance = "logn-over-n"   # or a number
//! output = "out/rate"    # optional prefix for .csv/.timing.csv/.json
//! threads = 4            # optional; KARMIC_THREADS overrides when unset
//!
//! [model]
//! kind = "gaussian"      # or "holder" with `beta` (and optional `eta = "sine"|"half"`)
//! mu = [2.0, 0.0]
//! kappa = 0.3
//!
//! [estimator]
//! kind = "logistic"      # or "kernel" (beta, bandwidth_const) or "true-eta"
//!
//! [evaluation]           # optional; closed form for Gaussian, quadrature for Hölder
//! mode = "closed-form"
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plugin::{
    bayes_optimum, regret_against, train_plugin, EstimatorSpec, EvalMode, TolerancePolicy, DEFAULT_QUADRATURE_POINTS,
};
use crate::synth::{least_squares, HolderEta};
use crate::{GaussianModel, HolderModel, MetricSpec, SynthModel};

pub const SUMMARY_SCHEMA: u32 = 1;
pub const THREADS_ENV: &str = "KARMIC_THREADS";
/// Median regrets at or below this are left out of the slope fit.
pub const MIN_FIT_REGRET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Gaussian {
        mu: Vec<f64>,
        kappa: f64,
    },
    Holder {
        beta: f64,
        #[serde(default = "default_eta")]
        eta: HolderEta,
    },
}

fn default_eta() -> HolderEta {
    HolderEta::Sine
}

impl ModelConfig {
    pub fn build(&self) -> Result<SynthModel> {
        Ok(match self {
            ModelConfig::Gaussian { mu, kappa } => SynthModel::Gaussian(GaussianModel::new(mu.clone(), *kappa)?),
            ModelConfig::Holder { beta, eta } => SynthModel::Holder(HolderModel::new(*eta, *beta)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorConfig {
    Logistic,
    Kernel {
        beta: f64,
        #[serde(default = "one")]
        bandwidth_const: f64,
    },
    TrueEta,
}

fn one() -> f64 {
    1.0
}

impl EstimatorConfig {
    fn build(&self, model: &SynthModel) -> EstimatorSpec {
        match self {
            EstimatorConfig::Logistic => EstimatorSpec::logistic(),
            EstimatorConfig::Kernel { beta, bandwidth_const } => {
                EstimatorSpec::Kernel { beta: *beta, bandwidth_const: *bandwidth_const }
            }
            EstimatorConfig::TrueEta => EstimatorSpec::TrueEta { model: model.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub metric: String,
    pub estimator: EstimatorConfig,
    pub n_list: Vec<usize>,
    pub seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub tolerance: TolerancePolicy,
    #[serde(default)]
    pub evaluation: Option<EvalMode>,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::InvalidInput("seeds must be at least 1".into()));
        }
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("n_list must be nonempty and strictly increasing".into()));
        }
        MetricSpec::parse(&self.metric)?;
        self.model.build()?;
        Ok(())
    }

    pub fn evaluation_mode(&self) -> EvalMode {
        self.evaluation.unwrap_or(match self.model {
            ModelConfig::Gaussian { .. } => EvalMode::ClosedForm,
            ModelConfig::Holder { .. } => EvalMode::Quadrature { points: DEFAULT_QUADRATURE_POINTS },
        })
    }

    /// Worker count: config, then `KARMIC_THREADS`, then rayon's default.
    pub fn worker_count(&self) -> Option<usize> {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()))
            .filter(|&t| t > 0)
    }
}

/// Seed of row `(n, replicate)`.
pub fn row_seed(base_seed: u64, n: usize, replicate: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(n as u64)).wrapping_add(replicate as u64))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub seed: usize,
    pub data_seed: u64,
    pub tolerance: Option<f64>,
    pub delta_star: f64,
    pub delta_hat: Option<f64>,
    pub u_star: f64,
    pub u_hat: Option<f64>,
    pub regret: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAggregate {
    pub n: usize,
    pub median_regret: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub rows: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub aggregates: Vec<RateAggregate>,
}

impl RateTable {
    pub fn from_rows(rows: Vec<RateRow>) -> Self {
        let aggregates = aggregate(&rows);
        Self { rows, aggregates }
    }

    /// Table rows as CSV. Wall times are excluded so identical configurations give
    /// identical bytes; see [`RateTable::timing_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seed,data_seed,tolerance,delta_star,delta_hat,u_star,u_hat,regret,status\n");
        for r in &self.rows {
            let status = match &r.error {
                None => "ok".to_string(),
                Some(e) => format!("error:{}", e.replace([',', '\n'], ";")),
            };
            out.push_str(&format!(
                "{},{},{},{},{:?},{},{:?},{},{},{}\n",
                r.n,
                r.seed,
                r.data_seed,
                opt(r.tolerance),
                r.delta_star,
                opt(r.delta_hat),
                r.u_star,
                opt(r.u_hat),
                opt(r.regret),
                status
            ));
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("n,seed,wall_ms\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.3}\n", r.n, r.seed, r.wall_ms));
        }
        out
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:?}"))
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn aggregate(rows: &[RateRow]) -> Vec<RateAggregate> {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let group: Vec<&RateRow> = rows.iter().filter(|r| r.n == n).collect();
            let mut regrets: Vec<f64> = group.iter().filter_map(|r| r.regret).collect();
            if regrets.is_empty() {
                return None;
            }
            regrets.sort_by(f64::total_cmp);
            let (q1, q3) = (quantile(&regrets, 0.25), quantile(&regrets, 0.75));
            Some(RateAggregate {
                n,
                median_regret: quantile(&regrets, 0.5),
                q1,
                q3,
                iqr: q3 - q1,
                rows: group.len(),
                failed: group.len() - regrets.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used_n: Vec<usize>,
    /// Sample sizes whose median regret was at or below `1e-12`.
    pub excluded_n: Vec<usize>,
}

/// OLS of `log(median regret)` on `log n` over the table aggregates.
pub fn fit_loglog_slope(table: &RateTable) -> Result<LogLogFit> {
    let pts: Vec<(usize, f64)> = table.aggregates.iter().map(|a| (a.n, a.median_regret)).collect();
    fit_loglog_points(&pts)
}

pub fn fit_loglog_points(points: &[(usize, f64)]) -> Result<LogLogFit> {
    let (used, excluded): (Vec<_>, Vec<_>) = points.iter().partition(|p| p.1 > MIN_FIT_REGRET);
    if used.len() < 3 {
        return Err(Error::InsufficientPoints(used.len()));
    }
    let xy: Vec<(f64, f64)> = used.iter().map(|&&(n, r)| ((n as f64).ln(), r.ln())).collect();
    let (slope, intercept, r2) = least_squares(&xy);
    Ok(LogLogFit {
        slope,
        intercept,
        r2,
        used_n: used.iter().map(|p| p.0).collect(),
        excluded_n: excluded.iter().map(|p| p.0).collect(),
    })
}

/// Runs every `(n, seed)` row. Failures are recorded per row and do not stop the run.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateTable> {
    cfg.validate()?;
    let metric = MetricSpec::parse(&cfg.metric)?;
    let model = cfg.model.build()?;
    let estimator = cfg.estimator.build(&model);
    let mode = cfg.evaluation_mode();
    let (delta_star, u_star) = bayes_optimum(&metric, &model)?;

    let jobs: Vec<(usize, usize)> = cfg.n_list.iter().flat_map(|&n| (0..cfg.seeds).map(move |s| (n, s))).collect();
    let run_row = |&(n, s): &(usize, usize)| -> RateRow {
        let start = Instant::now();
        let data_seed = row_seed(cfg.base_seed, n, s);
        let outcome = (|| {
            let data = model.sample(n, data_seed);
            let clf = train_plugin(&metric, &data, &estimator, &cfg.tolerance, data_seed)?;
            let report = regret_against(&metric, &clf, &model, mode, delta_star, u_star)?;
            Ok::<_, Error>((clf.provenance.search.tolerance, report))
        })();
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok((tol, rep)) => RateRow {
                n,
                seed: s,
                data_seed,
                tolerance: Some(tol),
                delta_star,
                delta_hat: Some(rep.delta_hat),
                u_star,
                u_hat: Some(rep.u_hat),
                regret: Some(rep.regret),
                wall_ms,
                error: None,
            },
            Err(e) => RateRow {
                n,
                seed: s,
                data_seed,
                tolerance: None,
                delta_star,
                delta_hat: None,
                u_star,
                u_hat: None,
                regret: None,
                wall_ms,
                error: Some(e.code().to_string()),
            },
        }
    };
    let rows: Vec<RateRow> = match cfg.worker_count() {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(run_row).collect())
        }
        None => jobs.par_iter().map(run_row).collect(),
    };
    Ok(RateTable::from_rows(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub delta_star: Option<f64>,
    pub u_star: Option<f64>,
    pub aggregates: Vec<RateAggregate>,
    pub slope: Option<f64>,
    pub fit: Option<LogLogFit>,
    pub fit_error: Option<String>,
    pub failed_rows: usize,
}

pub fn summarize(cfg: &ExperimentConfig, table: &RateTable) -> RateSummary {
    let fit = fit_loglog_slope(table);
    let first = table.rows.first();
    RateSummary {
        schema: SUMMARY_SCHEMA,
        config: cfg.clone(),
        delta_star: first.map(|r| r.delta_star),
        u_star: first.map(|r| r.u_star),
        aggregates: table.aggregates.clone(),
        slope: fit.as_ref().ok().map(|f| f.slope),
        fit_error: fit.as_ref().err().map(|e| e.code().to_string()),
        fit: fit.ok(),
        failed_rows: table.failed_rows(),
    }
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub table: PathBuf,
    pub timing: PathBuf,
    pub summary: PathBuf,
}

/// Writes `<prefix>.csv`, `<prefix>.timing.csv` and `<prefix>.json`.
pub fn write_outputs(cfg: &ExperimentConfig, table: &RateTable, prefix: &Path) -> Result<OutputPaths> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let with_ext = |ext: &str| PathBuf::from(format!("{}.{ext}", prefix.display()));
    let paths = OutputPaths { table: with_ext("csv"), timing: with_ext("timing.csv"), summary: with_ext("json") };
    std::fs::write(&paths.table, table.to_csv())?;
    std::fs::write(&paths.timing, table.timing_csv())?;
    std::fs::write(&paths.summary, serde_json::to_string_pretty(&summarize(cfg, table))?)?;
    Ok(paths)
}
