//! The two-step plug-in classifier: fit `η̂` on one half of the sample, search the
//! threshold on the other half, predict `sign(η̂(x) - δ̂)`.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confusion::ScoredSample;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::estimators::{
    fit_kernel_smoother, fit_logistic_mle, ScorerSpec, DEFAULT_BANDWIDTH_CONST, DEFAULT_LOGISTIC_MAX_ITER,
    DEFAULT_LOGISTIC_TOL,
};
use crate::scalar::logit;
use crate::synth::{stream_rng, FEATURE_STREAM, LABEL_STREAM};
use crate::threshold::{binary_search_on_sample, fixed_point_threshold, ThresholdSearchConfig, DEFAULT_MAX_ITERATIONS};
use crate::{ConfusionMatrix, Dataset, GaussianModel, MetricSpec, Scorer, SynthModel};

const SPLIT_STREAM: u64 = 2;
pub const MAX_SPLIT_ATTEMPTS: usize = 10;
/// Fixed-point tolerance used for `δ*` in regret reports.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
pub const DEFAULT_QUADRATURE_POINTS: usize = 1 << 20;
/// Monte Carlo samples per shard; shard `k` draws from its own stream.
const MC_SHARD: usize = 1 << 16;

/// Per-shard sums of the confusion entries and their outer products.
type ShardMoments = ([f64; 4], [[f64; 4]; 4]);

/// How `η̂` is obtained from the first half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorSpec {
    Logistic {
        #[serde(default = "default_logistic_tol")]
        tol: f64,
        #[serde(default = "default_logistic_iter")]
        max_iter: usize,
    },
    Kernel {
        beta: f64,
        #[serde(default = "default_bandwidth_const")]
        bandwidth_const: f64,
    },
    /// Skip estimation and use the generator's own `η`.
    TrueEta { model: SynthModel },
}

fn default_logistic_tol() -> f64 {
    DEFAULT_LOGISTIC_TOL
}
fn default_logistic_iter() -> usize {
    DEFAULT_LOGISTIC_MAX_ITER
}
fn default_bandwidth_const() -> f64 {
    DEFAULT_BANDWIDTH_CONST
}

impl EstimatorSpec {
    pub fn logistic() -> Self {
        EstimatorSpec::Logistic { tol: DEFAULT_LOGISTIC_TOL, max_iter: DEFAULT_LOGISTIC_MAX_ITER }
    }

    pub fn kernel(beta: f64) -> Self {
        EstimatorSpec::Kernel { beta, bandwidth_const: DEFAULT_BANDWIDTH_CONST }
    }

    /// Parses `logistic`, `kernel`, `kernel:<β>` or `kernel:<β>,<const>`; `true-eta`
    /// needs a model and is built directly.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "logistic" {
            return Ok(Self::logistic());
        }
        if s == "kernel" {
            return Ok(Self::kernel(1.0));
        }
        if let Some(rest) = s.strip_prefix("kernel:") {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{p}`: {e}"))))
                .collect::<Result<_>>()?;
            return match parts[..] {
                [beta] => Ok(Self::kernel(beta)),
                [beta, bandwidth_const] => Ok(EstimatorSpec::Kernel { beta, bandwidth_const }),
                _ => Err(Error::Parse(format!("kernel takes `<beta>[,<const>]`, got `{rest}`"))),
            };
        }
        Err(Error::Parse(format!("unknown estimator `{s}`")))
    }

    fn fit(&self, data: &Dataset) -> Result<Scorer> {
        match self {
            EstimatorSpec::Logistic { tol, max_iter } => Ok(fit_logistic_mle(data, *tol, *max_iter)?.0),
            EstimatorSpec::Kernel { beta, bandwidth_const } => {
                Ok(Scorer::Kernel(fit_kernel_smoother(data, *beta, *bandwidth_const)?))
            }
            EstimatorSpec::TrueEta { model } => Ok(Scorer::TrueEta(model.clone())),
        }
    }
}

/// Threshold-search tolerance: `max(log n₂ / n₂, 1e-8)` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TolerancePolicy {
    Named(NamedTolerance),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedTolerance {
    #[serde(rename = "logn-over-n")]
    LogNOverN,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy::Named(NamedTolerance::LogNOverN)
    }
}

impl TolerancePolicy {
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim() == "logn-over-n" {
            return Ok(Self::default());
        }
        s.trim()
            .parse::<f64>()
            .map(TolerancePolicy::Fixed)
            .map_err(|e| Error::Parse(format!("tolerance `{s}`: {e}")))
    }

    pub fn config(&self, n2: usize) -> Result<ThresholdSearchConfig<f64>> {
        match self {
            TolerancePolicy::Named(NamedTolerance::LogNOverN) => Ok(ThresholdSearchConfig::for_sample_size(n2)),
            TolerancePolicy::Fixed(t) => ThresholdSearchConfig::new(*t, DEFAULT_MAX_ITERATIONS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub iterations: usize,
    pub tolerance: f64,
    /// Last finite `H` seen during the search.
    pub last_h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub metric: String,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
    pub split_attempts: usize,
    pub search: SearchSummary,
}

/// `x ↦ sign(η̂(x) - δ̂)`, positive iff the score is strictly above `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PluginClassifier {
    pub scorer: Scorer,
    pub delta: f64,
    pub provenance: Provenance,
}

/// JSON form of a [`PluginClassifier`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginClassifierRecord {
    pub scorer: ScorerSpec<f64>,
    pub delta: f64,
    pub provenance: Provenance,
}

impl PluginClassifier {
    pub fn to_record(&self) -> Result<PluginClassifierRecord> {
        Ok(PluginClassifierRecord { scorer: self.scorer.to_spec()?, delta: self.delta, provenance: self.provenance.clone() })
    }

    pub fn from_record(rec: &PluginClassifierRecord, base_dir: Option<&Path>) -> Result<Self> {
        Ok(Self { scorer: rec.scorer.load(base_dir)?, delta: rec.delta, provenance: rec.provenance.clone() })
    }
}

/// Seeded random split into halves `n₁ = ⌊n/2⌋`, `n₂ = n - n₁`; reshuffles until
/// both halves contain both labels.
pub fn split_indices(data: &Dataset, seed: u64) -> Result<(Vec<usize>, Vec<usize>, usize)> {
    let n = data.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 samples to split, got {n}")));
    }
    let mut rng = stream_rng(seed, SPLIT_STREAM);
    let mut perm: Vec<usize> = (0..n).collect();
    let n1 = n / 2;
    let both = |idx: &[usize]| {
        let pos = idx.iter().filter(|&&i| data.labels()[i].is_pos()).count();
        pos > 0 && pos < idx.len()
    };
    for attempt in 1..=MAX_SPLIT_ATTEMPTS {
        perm.shuffle(&mut rng);
        let (a, b) = perm.split_at(n1);
        if both(a) && both(b) {
            return Ok((a.to_vec(), b.to_vec(), attempt));
        }
    }
    Err(Error::SplitDegenerate(MAX_SPLIT_ATTEMPTS))
}

pub fn train_plugin(
    metric: &MetricSpec,
    data: &Dataset,
    estimator: &EstimatorSpec,
    tolerance: &TolerancePolicy,
    seed: u64,
) -> Result<PluginClassifier> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let (first, second, attempts) = split_indices(data, seed)?;
    let fit_half = data.subset(&first);
    let search_half = data.subset(&second);
    let scorer = estimator.fit(&fit_half)?;
    let cfg = tolerance.config(search_half.len())?;
    let sample = ScoredSample::from_scorer(&scorer, &search_half)?;
    let result = binary_search_on_sample(metric, &sample, &cfg)?;
    let last_h = result.h_trace.iter().rev().find_map(|p| p.h);
    Ok(PluginClassifier {
        scorer,
        delta: result.delta_hat,
        provenance: Provenance {
            metric: metric.name.clone(),
            n1: first.len(),
            n2: second.len(),
            seed,
            split_attempts: attempts,
            search: SearchSummary { iterations: result.iterations, tolerance: cfg.tolerance, last_h },
        },
    })
}

pub fn classify(clf: &PluginClassifier, x: &[f64]) -> Result<Label> {
    Ok(if clf.scorer.score(x)? > clf.delta { Label::Pos } else { Label::Neg })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EvalMode {
    /// Exact normal tails; Gaussian model with a logistic or true-η scorer.
    ClosedForm,
    /// `m` draws from the model, sharded over independent streams of `seed`.
    MonteCarlo { m: usize, seed: u64 },
    /// Midpoint rule on `[0, 1]`; one-dimensional Hölder model only.
    Quadrature { points: usize },
}

impl EvalMode {
    /// Parses `closed-form`, `monte-carlo[:m[:seed]]` or `quadrature[:points]`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<u64>().map_err(|e| Error::Parse(format!("`{p}`: {e}")));
        match parts[..] {
            ["closed-form"] => Ok(EvalMode::ClosedForm),
            ["monte-carlo"] => Ok(EvalMode::MonteCarlo { m: DEFAULT_MC_SAMPLES, seed: 0 }),
            ["monte-carlo", m] => Ok(EvalMode::MonteCarlo { m: num(m)? as usize, seed: 0 }),
            ["monte-carlo", m, seed] => Ok(EvalMode::MonteCarlo { m: num(m)? as usize, seed: num(seed)? }),
            ["quadrature"] => Ok(EvalMode::Quadrature { points: DEFAULT_QUADRATURE_POINTS }),
            ["quadrature", p] => Ok(EvalMode::Quadrature { points: num(p)? as usize }),
            _ => Err(Error::Parse(format!("unknown evaluation mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub u_star: f64,
    pub u_hat: f64,
    pub regret: f64,
    pub delta_star: f64,
    pub delta_hat: f64,
    pub mode: EvalMode,
    /// Standard error of `u_hat` (Monte Carlo only).
    pub std_error: Option<f64>,
}

/// Bayes-optimal threshold and utility of `model` under `metric`.
pub fn bayes_optimum(metric: &MetricSpec, model: &SynthModel) -> Result<(f64, f64)> {
    let delta_star = fixed_point_threshold(metric, |d| model.population_confusion(d), FIXED_POINT_TOL)?;
    let u_star = metric.value(&model.population_confusion(delta_star)?)?;
    Ok((delta_star, u_star))
}

/// Population confusion matrix of `sign(scorer(x) - delta)` under `model`.
pub fn classifier_population_confusion(
    scorer: &Scorer,
    delta: f64,
    model: &SynthModel,
    mode: EvalMode,
) -> Result<(ConfusionMatrix, Option<[[f64; 4]; 4]>)> {
    match mode {
        EvalMode::ClosedForm => {
            let SynthModel::Gaussian(g) = model else {
                return Err(Error::ModeUnsupported("closed form needs the Gaussian model".into()));
            };
            let (w, b) = match scorer {
                Scorer::Logistic { w, b } => (w.clone(), *b),
                Scorer::TrueEta(SynthModel::Gaussian(t)) => (t.mu.clone(), t.prior_logit()),
                _ => {
                    return Err(Error::ModeUnsupported(
                        "closed form needs a logistic or Gaussian true-eta scorer".into(),
                    ))
                }
            };
            Ok((logistic_halfspace(g, &w, b, delta)?, None))
        }
        EvalMode::MonteCarlo { m, seed } => monte_carlo_confusion(scorer, delta, model, m, seed).map(|(c, cov)| (c, Some(cov))),
        EvalMode::Quadrature { points } => {
            let SynthModel::Holder(h) = model else {
                return Err(Error::ModeUnsupported("quadrature needs the one-dimensional Hölder model".into()));
            };
            if points == 0 {
                return Err(Error::InvalidInput("quadrature needs at least one point".into()));
            }
            let chunks: Vec<[f64; 4]> = (0..points.div_ceil(MC_SHARD))
                .into_par_iter()
                .map(|k| {
                    let mut acc = [0.0; 4];
                    for i in k * MC_SHARD..points.min((k + 1) * MC_SHARD) {
                        let x = (i as f64 + 0.5) / points as f64;
                        let eta = h.eta_at(x);
                        let slot = if scorer.score(&[x]).map(|s| s > delta).unwrap_or(false) { 0 } else { 2 };
                        acc[slot] += eta;
                        acc[slot + 1] += 1.0 - eta;
                    }
                    acc
                })
                .collect();
            let mut acc = [0.0; 4];
            for c in chunks {
                for j in 0..4 {
                    acc[j] += c[j];
                }
            }
            let w = 1.0 / points as f64;
            Ok((ConfusionMatrix::new(acc[0] * w, acc[1] * w, acc[2] * w, acc[3] * w), None))
        }
    }
}

/// `sigmoid(wᵀx + b) > δ ⟺ wᵀx > logit(δ) - b`; `δ ≤ 0` predicts everything positive.
fn logistic_halfspace(g: &GaussianModel, w: &[f64], b: f64, delta: f64) -> Result<ConfusionMatrix> {
    let offset = if delta <= 0.0 {
        f64::NEG_INFINITY
    } else if delta >= 1.0 {
        f64::INFINITY
    } else {
        logit(delta) - b
    };
    if offset.is_infinite() {
        let all = offset < 0.0;
        let k = g.kappa;
        return Ok(if all {
            ConfusionMatrix::new(k, 1.0 - k, 0.0, 0.0)
        } else {
            ConfusionMatrix::new(0.0, 0.0, k, 1.0 - k)
        });
    }
    g.halfspace_confusion(w, offset)
}

/// Rao–Blackwellised Monte Carlo: each draw contributes `η(x)` and `1 - η(x)` rather
/// than a sampled label. Returns the estimate and the covariance of the mean.
fn monte_carlo_confusion(scorer: &Scorer, delta: f64, model: &SynthModel, m: usize, seed: u64) -> Result<(ConfusionMatrix, [[f64; 4]; 4])> {
    if m == 0 {
        return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
    }
    let shards = m.div_ceil(MC_SHARD);
    let partial: Vec<Result<ShardMoments>> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let count = MC_SHARD.min(m - k * MC_SHARD);
            // streams 0/1 belong to dataset sampling; shards use pairs above them
            let mut label_rng = stream_rng(seed, 2 * (k as u64 + 1) + LABEL_STREAM);
            let mut feature_rng = stream_rng(seed, 2 * (k as u64 + 1) + FEATURE_STREAM);
            let mut x = Vec::with_capacity(model.dim());
            let mut sum = [0.0; 4];
            let mut sq = [[0.0; 4]; 4];
            for _ in 0..count {
                model.draw_features(&mut label_rng, &mut feature_rng, &mut x);
                let eta = model.true_eta(&x)?;
                let mut c = [0.0; 4];
                if scorer.score(&x)? > delta {
                    c[0] = eta;
                    c[1] = 1.0 - eta;
                } else {
                    c[2] = eta;
                    c[3] = 1.0 - eta;
                }
                for a in 0..4 {
                    sum[a] += c[a];
                    for b in 0..4 {
                        sq[a][b] += c[a] * c[b];
                    }
                }
            }
            Ok((sum, sq))
        })
        .collect();
    let mut sum = [0.0; 4];
    let mut sq = [[0.0; 4]; 4];
    for p in partial {
        let (s, q) = p?;
        for a in 0..4 {
            sum[a] += s[a];
            for b in 0..4 {
                sq[a][b] += q[a][b];
            }
        }
    }
    let mf = m as f64;
    let mean = sum.map(|s| s / mf);
    let mut cov = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            cov[a][b] = (sq[a][b] / mf - mean[a] * mean[b]) / mf;
        }
    }
    Ok((ConfusionMatrix::from_array(mean), cov))
}

/// Excess utility of `clf` over the Bayes-optimal threshold classifier of `model`.
pub fn population_regret(metric: &MetricSpec, clf: &PluginClassifier, model: &SynthModel, mode: EvalMode) -> Result<RegretReport> {
    let (delta_star, u_star) = bayes_optimum(metric, model)?;
    regret_against(metric, clf, model, mode, delta_star, u_star)
}

/// [`population_regret`] with a precomputed optimum.
pub fn regret_against(
    metric: &MetricSpec,
    clf: &PluginClassifier,
    model: &SynthModel,
    mode: EvalMode,
    delta_star: f64,
    u_star: f64,
) -> Result<RegretReport> {
    let (c, cov) = classifier_population_confusion(&clf.scorer, clf.delta, model, mode)?;
    let u_hat = metric.value(&c)?;
    let std_error = match cov {
        Some(cov) => {
            let g = metric.gradient(&c)?;
            let var: f64 = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| g[a] * cov[a][b] * g[b]).sum();
            Some(var.max(0.0).sqrt())
        }
        None => None,
    };
    Ok(RegretReport { u_star, u_hat, regret: u_star - u_hat, delta_star, delta_hat: clf.delta, mode, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::default_tolerance;

    fn gaussian(mu: Vec<f64>, kappa: f64) -> SynthModel {
        SynthModel::Gaussian(GaussianModel::new(mu, kappa).unwrap())
    }

    fn fixed_clf(scorer: Scorer, delta: f64) -> PluginClassifier {
        PluginClassifier {
            scorer,
            delta,
            provenance: Provenance {
                metric: "accuracy".into(),
                n1: 0,
                n2: 0,
                seed: 0,
                split_attempts: 0,
                search: SearchSummary { iterations: 0, tolerance: 0.0, last_h: None },
            },
        }
    }

    #[test]
    fn tie_and_constant_classification() {
        let clf = fixed_clf(Scorer::Constant(0.5), 0.5);
        assert_eq!(classify(&clf, &[1.0]).unwrap(), Label::Neg);
        let clf = fixed_clf(Scorer::Constant(1.0), 0.5);
        assert!((0..10).all(|i| classify(&clf, &[i as f64]).unwrap() == Label::Pos));
        let clf = fixed_clf(Scorer::Logistic { w: vec![1.0, 2.0], b: 0.0 }, 0.5);
        assert!(matches!(classify(&clf, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let data = GaussianModel::new(vec![1.0], 0.5).unwrap().sample(101, 3);
        let (a, b, _) = split_indices(&data, 9).unwrap();
        assert_eq!((a.len(), b.len()), (50, 51));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_eq!(split_indices(&data, 9).unwrap().0, a);
        assert_ne!(split_indices(&data, 10).unwrap().0, a);
    }

    #[test]
    fn degenerate_split_is_reported() {
        let mut labels = vec![Label::Neg; 10];
        labels[0] = Label::Pos;
        let data = Dataset::new(1, (0..10).map(f64::from).collect(), labels, None).unwrap();
        let r = train_plugin(&MetricSpec::accuracy(), &data, &EstimatorSpec::logistic(), &TolerancePolicy::default(), 1);
        assert!(matches!(r, Err(Error::SplitDegenerate(10))));
    }

    #[test]
    fn parse_modes_and_estimators() {
        assert_eq!(EvalMode::parse("closed-form").unwrap(), EvalMode::ClosedForm);
        assert_eq!(EvalMode::parse("monte-carlo:100:4").unwrap(), EvalMode::MonteCarlo { m: 100, seed: 4 });
        assert_eq!(EvalMode::parse("quadrature:64").unwrap(), EvalMode::Quadrature { points: 64 });
        assert!(EvalMode::parse("exact").is_err());
        assert_eq!(EstimatorSpec::parse("kernel:2,0.5").unwrap(), EstimatorSpec::Kernel { beta: 2.0, bandwidth_const: 0.5 });
        assert!(EstimatorSpec::parse("forest").is_err());
        assert_eq!(TolerancePolicy::parse("logn-over-n").unwrap(), TolerancePolicy::default());
        assert_eq!(TolerancePolicy::parse("0.001").unwrap(), TolerancePolicy::Fixed(0.001));
    }

    #[test]
    fn true_eta_at_optimum_has_zero_regret() {
        let model = gaussian(vec![2.0, 0.0], 0.5);
        let metric = MetricSpec::f1();
        let (delta_star, _) = bayes_optimum(&metric, &model).unwrap();
        let clf = fixed_clf(Scorer::TrueEta(model.clone()), delta_star);
        let r = population_regret(&metric, &clf, &model, EvalMode::ClosedForm).unwrap();
        assert!(r.regret.abs() < 1e-9, "{r:?}");
        let mc = population_regret(&metric, &clf, &model, EvalMode::MonteCarlo { m: 200_000, seed: 5 }).unwrap();
        assert!(mc.regret.abs() < 3.0 * mc.std_error.unwrap() + 1e-12, "{mc:?}");
    }

    #[test]
    fn closed_form_rejects_kernel_scorer() {
        let model = gaussian(vec![2.0], 0.5);
        let data = model.sample(200, 1);
        let k = Scorer::Kernel(fit_kernel_smoother(&data, 1.0, 1.0).unwrap());
        let clf = fixed_clf(k, 0.5);
        let r = population_regret(&MetricSpec::accuracy(), &clf, &model, EvalMode::ClosedForm);
        assert!(matches!(r, Err(Error::ModeUnsupported(_))));
        let holder = SynthModel::Holder(crate::HolderModel::sine(1.0));
        let clf = fixed_clf(Scorer::Constant(0.9), 0.5);
        assert!(matches!(
            population_regret(&MetricSpec::accuracy(), &clf, &holder, EvalMode::ClosedForm),
            Err(Error::ModeUnsupported(_))
        ));
    }

    #[test]
    fn monte_carlo_is_shard_independent() {
        // the result depends on (m, seed) only; rayon scheduling cannot change it
        let model = gaussian(vec![1.0, 1.0], 0.4);
        let scorer = Scorer::TrueEta(model.clone());
        let a = monte_carlo_confusion(&scorer, 0.4, &model, 150_000, 3).unwrap().0;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| monte_carlo_confusion(&scorer, 0.4, &model, 150_000, 3).unwrap().0);
        assert_eq!(a, b);
    }

    #[test]
    fn classifier_json_round_trip() {
        let model = gaussian(vec![2.0, 0.0], 0.3);
        let data = model.sample(2_000, 4);
        let clf = train_plugin(&MetricSpec::f1(), &data, &EstimatorSpec::logistic(), &TolerancePolicy::default(), 4).unwrap();
        let json = serde_json::to_string(&clf.to_record().unwrap()).unwrap();
        let rec: PluginClassifierRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(PluginClassifier::from_record(&rec, None).unwrap(), clf);
        assert_eq!(clf.provenance.n1 + clf.provenance.n2, 2_000);
        assert_eq!(clf.provenance.search.tolerance, default_tolerance(1_000));
    }
}
