//! Threshold estimation for threshold-quasi-concave metrics.
//!
//! The utility of `sign(η(x) - δ)` changes with `δ` in the direction
//! `v(δ) = (-δ, -(1-δ), δ, 1-δ)` of the confusion vector, so
//! `H(δ) = ∇G(C(δ))ᵀ v(δ)` carries the sign of the derivative of the utility in
//! `δ`. Bisection on that sign finds the unique maximiser when the utility is
//! strictly quasi-concave in the threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confusion::{ConfusionMatrix, ScoredSample};
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::estimators::Scorer;
use crate::metric::{dot, MetricSpec};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ITERATIONS: usize = 64;
pub const MIN_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_GRID_STEP: f64 = 1e-4;
pub const MAX_DISCRETE_ATOMS: usize = 20;
/// How many `1/(2n)` nudges to try when the midpoint falls outside the metric domain.
const MAX_NUDGES: usize = 8;

/// `v(δ) = (-δ, -(1-δ), δ, 1-δ)`.
pub fn direction_vector<T: Scalar>(delta: T) -> [T; 4] {
    let rest = T::one() - delta;
    [-delta, -rest, delta, rest]
}

/// `H = ∇G(c)ᵀ v(δ)`.
pub fn h_from_confusion<T: Scalar>(metric: &MetricSpec<T>, c: &ConfusionMatrix<T>, delta: T) -> Result<T> {
    Ok(dot(&metric.gradient(c)?, &direction_vector(delta)))
}

/// Empirical `H(δ)` for the threshold classifier `(scorer, δ)` on `data`.
pub fn h_value<T: Scalar>(metric: &MetricSpec<T>, scorer: &Scorer<T>, data: &Dataset<T>, delta: T) -> Result<T> {
    let c = crate::confusion::empirical_confusion(scorer, delta, data)?;
    h_from_confusion(metric, &c, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearchConfig<T> {
    /// Stop once the bracket is narrower than this.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> ThresholdSearchConfig<T> {
    pub fn new(tolerance: T, max_iterations: usize) -> Result<Self> {
        if !(tolerance > T::zero() && tolerance < T::one()) {
            return Err(Error::InvalidInput(format!("tolerance must lie in (0,1), got {tolerance}")));
        }
        if max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        Ok(Self { tolerance, max_iterations })
    }

    /// Tolerance `max(log n / n, 1e-8)` for a search sample of size `n`.
    pub fn for_sample_size(n: usize) -> Self {
        Self { tolerance: T::lit(default_tolerance(n)), max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

pub fn default_tolerance(n: usize) -> f64 {
    let n = n.max(1) as f64;
    (n.ln() / n).max(MIN_TOLERANCE)
}

/// One evaluation of `H` during a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HTracePoint<T> {
    pub delta: T,
    /// `None` when the confusion matrix at `delta` left the metric domain.
    pub h: Option<T>,
    /// Bracket move taken: `1` raised the left end, `-1` lowered the right end.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult<T> {
    pub delta_hat: T,
    pub iterations: usize,
    pub h_trace: Vec<HTracePoint<T>>,
}

/// Bisection on the sign of the empirical `H`, starting from `[0, 1]`.
pub fn binary_search_threshold<T: Scalar>(
    metric: &MetricSpec<T>,
    scorer: &Scorer<T>,
    data: &Dataset<T>,
    cfg: &ThresholdSearchConfig<T>,
) -> Result<ThresholdResult<T>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let sample = ScoredSample::from_scorer(scorer, data)?;
    binary_search_on_sample(metric, &sample, cfg)
}

/// [`binary_search_threshold`] on pre-scored data.
pub fn binary_search_on_sample<T: Scalar>(
    metric: &MetricSpec<T>,
    sample: &ScoredSample<T>,
    cfg: &ThresholdSearchConfig<T>,
) -> Result<ThresholdResult<T>> {
    if sample.is_empty() {
        return Err(Error::EmptyData);
    }
    let two = T::lit(2.0);
    let nudge = T::one() / (two * T::lit(sample.len() as f64));
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut any_valid = false;
    while (hi - lo).abs() >= cfg.tolerance && iterations < cfg.max_iterations {
        let mid = (lo + hi) / two;
        let step = match evaluate_h(metric, sample, mid, nudge, lo, hi)? {
            Probe::Valid { delta, h } => {
                any_valid = true;
                let s: i8 = if h >= T::zero() { 1 } else { -1 };
                trace.push(HTracePoint { delta, h: Some(h), sign: s });
                s
            }
            // the classifier predicts one class only: the better side is the other one
            Probe::NoPredictedPositives => {
                trace.push(HTracePoint { delta: mid, h: None, sign: -1 });
                -1
            }
            Probe::NoPredictedNegatives => {
                trace.push(HTracePoint { delta: mid, h: None, sign: 1 });
                1
            }
        };
        if step >= 0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    if !any_valid && iterations > 0 {
        return Err(Error::DegenerateDistribution("no threshold in the bracket lies inside the metric domain".into()));
    }
    Ok(ThresholdResult { delta_hat: (lo + hi) / two, iterations, h_trace: trace })
}

enum Probe<T> {
    Valid { delta: T, h: T },
    NoPredictedPositives,
    NoPredictedNegatives,
}

fn evaluate_h<T: Scalar>(
    metric: &MetricSpec<T>,
    sample: &ScoredSample<T>,
    mid: T,
    nudge: T,
    lo: T,
    hi: T,
) -> Result<Probe<T>> {
    let c = sample.confusion(mid);
    match h_from_confusion(metric, &c, mid) {
        Ok(h) => return Ok(Probe::Valid { delta: mid, h }),
        Err(Error::MetricDomain(_)) => {}
        Err(e) => return Err(e),
    }
    let eps = T::domain_eps();
    let no_pos_pred = c.predicted_positive_rate() <= eps;
    let no_neg_pred = c.fn_ + c.tn <= eps;
    // move towards the side that predicts more of the missing class
    let direction = if no_pos_pred {
        -T::one()
    } else if no_neg_pred {
        T::one()
    } else {
        T::zero()
    };
    if direction != T::zero() {
        for k in 1..=MAX_NUDGES {
            let delta = mid + direction * nudge * T::lit(k as f64);
            if delta <= lo || delta >= hi {
                break;
            }
            let c = sample.confusion(delta);
            if let Ok(h) = h_from_confusion(metric, &c, delta) {
                return Ok(Probe::Valid { delta, h });
            }
        }
    }
    if no_pos_pred {
        Ok(Probe::NoPredictedPositives)
    } else if no_neg_pred {
        Ok(Probe::NoPredictedNegatives)
    } else {
        Err(Error::DegenerateDistribution(format!("confusion matrix {c:?} is outside the metric domain at {mid}")))
    }
}

/// Population threshold `δ*` solving `δ = threshold_map(C(δ))`, found by bisection on
/// the sign of `H(δ) = ∇G(C(δ))ᵀ v(δ)` over `(tol, 1 - tol)`.
///
/// Endpoints outside the metric domain are pulled inwards geometrically.
pub fn fixed_point_threshold<T, F>(metric: &MetricSpec<T>, pop_confusion: F, tol: T) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> Result<ConfusionMatrix<T>>,
{
    if !(tol > T::zero() && tol < T::lit(0.5)) {
        return Err(Error::InvalidInput(format!("tolerance must lie in (0, 0.5), got {tol}")));
    }
    let h = |d: T| -> Result<T> { h_from_confusion(metric, &pop_confusion(d)?, d) };
    let valid_endpoint = |start: T, towards_right: bool| -> Result<(T, T)> {
        let mut offset = start;
        for _ in 0..60 {
            let d = if towards_right { offset } else { T::one() - offset };
            match h(d) {
                Ok(v) => return Ok((d, v)),
                Err(Error::MetricDomain(_)) => offset = offset * T::lit(2.0),
                Err(e) => return Err(e),
            }
            if offset >= T::lit(0.5) {
                break;
            }
        }
        Err(Error::DegenerateDistribution("no threshold near the boundary lies in the metric domain".into()))
    };
    let (mut lo, h_lo) = valid_endpoint(tol, true)?;
    let (mut hi, h_hi) = valid_endpoint(tol, false)?;
    if !(h_lo >= T::zero() && h_hi < T::zero()) {
        return Err(Error::NoSignChange);
    }
    let two = T::lit(2.0);
    let width = (tol * T::lit(1e-3)).max(T::epsilon() * T::lit(8.0));
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = (lo + hi) / two;
        if h(mid)? >= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / two)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult<T> {
    pub delta: T,
    pub value: T,
}

/// Exhaustive search over `{0, step, 2·step, …, 1}`; ties go to the smallest `δ` and
/// grid points outside the metric domain are skipped.
pub fn grid_search_threshold<T: Scalar>(metric: &MetricSpec<T>, scorer: &Scorer<T>, data: &Dataset<T>, step: T) -> Result<T> {
    let sample = ScoredSample::from_scorer(scorer, data)?;
    Ok(grid_search_on_sample(metric, &sample, step)?.delta)
}

pub fn grid_search_on_sample<T: Scalar>(metric: &MetricSpec<T>, sample: &ScoredSample<T>, step: T) -> Result<GridSearchResult<T>> {
    if !(step > T::zero() && step <= T::lit(0.5)) {
        return Err(Error::InvalidInput(format!("grid step must lie in (0, 0.5], got {step}")));
    }
    if sample.is_empty() {
        return Err(Error::EmptyData);
    }
    let count = (T::one() / step).ceil().to_usize().expect("finite grid") + 1;
    let values: Vec<Option<T>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let delta = grid_point(k, step);
            metric.value(&sample.confusion(delta)).ok()
        })
        .collect();
    let mut best: Option<GridSearchResult<T>> = None;
    for (k, v) in values.into_iter().enumerate() {
        if let Some(value) = v {
            if best.is_none_or(|b| value > b.value) {
                best = Some(GridSearchResult { delta: grid_point(k, step), value });
            }
        }
    }
    best.ok_or_else(|| Error::MetricDomain("every grid threshold is outside the metric domain".into()))
}

fn grid_point<T: Scalar>(k: usize, step: T) -> T {
    (T::lit(k as f64) * step).min(T::one())
}

/// Every deterministic classifier on a finite support that attains the best utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOptimum<T> {
    pub best_utility: T,
    /// Label assignments (one label per atom) within `1e-12` of the best utility,
    /// ordered by their bitmask (atom `j` positive iff bit `j` is set).
    pub argmax_set: Vec<Vec<Label>>,
    pub utilities: Vec<T>,
}

/// Population confusion matrix of a labelling of atoms `(weight, η)`.
pub fn discrete_confusion<T: Scalar>(atoms: &[(T, T)], labels: &[Label]) -> ConfusionMatrix<T> {
    let mut c = ConfusionMatrix::default();
    for (&(w, eta), label) in atoms.iter().zip(labels) {
        if label.is_pos() {
            c.tp = c.tp + w * eta;
            c.fp = c.fp + w * (T::one() - eta);
        } else {
            c.fn_ = c.fn_ + w * eta;
            c.tn = c.tn + w * (T::one() - eta);
        }
    }
    c
}

/// Enumerates all `2^k` labellings of `k ≤ 20` atoms. Labellings outside the metric
/// domain are skipped.
pub fn brute_force_discrete<T: Scalar>(metric: &MetricSpec<T>, atoms: &[(T, T)]) -> Result<DiscreteOptimum<T>> {
    let k = atoms.len();
    if k > MAX_DISCRETE_ATOMS {
        return Err(Error::TooManyAtoms(k, MAX_DISCRETE_ATOMS));
    }
    if k == 0 {
        return Err(Error::EmptyData);
    }
    if atoms.iter().any(|&(w, e)| !(w >= T::zero()) || !(e >= T::zero() && e <= T::one())) {
        return Err(Error::InvalidInput("atoms need nonnegative weights and eta in [0,1]".into()));
    }
    let total: T = atoms.iter().map(|a| a.0).sum();
    if (total - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::InvalidInput(format!("atom weights sum to {total}, expected 1")));
    }
    let labels_of = |mask: usize| -> Vec<Label> {
        (0..k).map(|j| if mask >> j & 1 == 1 { Label::Pos } else { Label::Neg }).collect()
    };
    let values: Vec<Option<T>> = (0..1usize << k)
        .into_par_iter()
        .map(|mask| metric.value(&discrete_confusion(atoms, &labels_of(mask))).ok())
        .collect();
    let best = values
        .iter()
        .flatten()
        .copied()
        .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.max(v))))
        .ok_or_else(|| Error::MetricDomain("no labelling lies inside the metric domain".into()))?;
    let tie = T::lit(1e-12);
    let (argmax_set, utilities) = values
        .iter()
        .enumerate()
        .filter_map(|(mask, v)| v.filter(|&u| best - u <= tie).map(|u| (labels_of(mask), u)))
        .unzip();
    Ok(DiscreteOptimum { best_utility: best, argmax_set, utilities })
}

/// Whether `labels` can be written as `sign(η - δ)` for some `δ`: every positive atom
/// has larger `η` than every negative one.
pub fn is_threshold_rule<T: Scalar>(atoms: &[(T, T)], labels: &[Label]) -> bool {
    let min_pos = atoms.iter().zip(labels).filter(|(_, l)| l.is_pos()).map(|(a, _)| a.1).fold(T::infinity(), T::min);
    let max_neg = atoms
        .iter()
        .zip(labels)
        .filter(|(_, l)| !l.is_pos())
        .map(|(a, _)| a.1)
        .fold(T::neg_infinity(), T::max);
    min_pos > max_neg
}
