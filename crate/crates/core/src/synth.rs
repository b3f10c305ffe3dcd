//! Synthetic generative models with analytically known conditional probability.
//!
//! Random streams: every sampler seeds a `ChaCha20Rng` from the user seed and
//! reads labels from stream 0 and features from stream 1, so label draws do not
//! depend on the feature dimension and datasets are reproducible bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::confusion::ConfusionMatrix;
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::scalar::{logit, normal_sf, sigmoid, Scalar};

pub(crate) const LABEL_STREAM: u64 = 0;
pub(crate) const FEATURE_STREAM: u64 = 1;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixture `P(Y=1) = κ`, `X | Y=±1 ~ N(±μ/2, I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel<T> {
    pub mu: Vec<T>,
    pub kappa: T,
}

impl<T: Scalar> GaussianModel<T> {
    pub fn new(mu: Vec<T>, kappa: T) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidInput("mu must have at least one coordinate".into()));
        }
        if !(kappa > T::zero() && kappa < T::one()) {
            return Err(Error::InvalidInput(format!("kappa must lie in (0,1), got {kappa}")));
        }
        Ok(Self { mu, kappa })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu_norm(&self) -> T {
        self.mu.iter().map(|&m| m * m).sum::<T>().sqrt()
    }

    /// Log prior odds `log(κ / (1 - κ))`.
    pub fn prior_logit(&self) -> T {
        logit(self.kappa)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Dataset<T> {
        let mut label_rng = stream_rng(seed, LABEL_STREAM);
        let mut feature_rng = stream_rng(seed, FEATURE_STREAM);
        let kappa = self.kappa.as_f64();
        let d = self.dim();
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = label_rng.random();
            let label = if u < kappa { Label::Pos } else { Label::Neg };
            let sign = f64::from(label.sign());
            for &m in &self.mu {
                let z: f64 = feature_rng.sample(StandardNormal);
                features.push(T::lit(z + sign * 0.5 * m.as_f64()));
            }
            labels.push(label);
        }
        Dataset::new(d, features, labels, None).expect("sampler produces consistent shapes")
    }

    /// `η(x) = sigmoid(μᵀx + log(κ/(1-κ)))`.
    pub fn true_eta(&self, x: &[T]) -> Result<T> {
        check_dim(self.dim(), x.len())?;
        let z: T = self.mu.iter().zip(x).map(|(&m, &v)| m * v).sum();
        Ok(sigmoid(z + self.prior_logit()))
    }

    /// Population confusion matrix of the half-space rule `wᵀx > offset`.
    ///
    /// Under class ±1, `wᵀX ~ N(±wᵀμ/2, ‖w‖²)`.
    pub fn halfspace_confusion(&self, w: &[T], offset: T) -> Result<ConfusionMatrix<T>> {
        check_dim(self.dim(), w.len())?;
        let kappa = self.kappa;
        let norm = w.iter().map(|&v| v * v).sum::<T>().sqrt();
        let (pos_rate, neg_rate) = if norm > T::zero() {
            let half_proj = w.iter().zip(&self.mu).map(|(&a, &b)| a * b).sum::<T>() / T::lit(2.0);
            (normal_sf((offset - half_proj) / norm), normal_sf((offset + half_proj) / norm))
        } else if offset < T::zero() {
            (T::one(), T::one())
        } else {
            (T::zero(), T::zero())
        };
        let tp = kappa * pos_rate;
        let fp = (T::one() - kappa) * neg_rate;
        Ok(ConfusionMatrix::new(tp, fp, kappa - tp, (T::one() - kappa) - fp))
    }

    /// Confusion matrix of `sign(η(x) - δ)`: positive iff `μᵀx > logit(δ) - logit(κ)`.
    pub fn population_confusion(&self, delta: T) -> Result<ConfusionMatrix<T>> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::BoundaryThreshold(delta.as_f64()));
        }
        self.halfspace_confusion(&self.mu, logit(delta) - self.prior_logit())
    }
}

/// Fixed smooth conditional-probability shapes on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolderEta {
    /// `η(x) = 0.5 + 0.45 sin(2πx)`.
    Sine,
    /// `η ≡ 0.5`.
    Half,
}

/// `X ~ U[0, 1]`, `P(Y = 1 | X) = η(X)` for a fixed smooth `η`. `beta` is the nominal
/// smoothness used to pick kernel bandwidths; both shapes are infinitely smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderModel<T> {
    pub eta: HolderEta,
    pub beta: T,
}

const SINE_AMPLITUDE: f64 = 0.45;

impl<T: Scalar> HolderModel<T> {
    pub fn new(eta: HolderEta, beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { eta, beta })
    }

    pub fn sine(beta: T) -> Self {
        Self { eta: HolderEta::Sine, beta }
    }

    pub fn eta_at(&self, x: T) -> T {
        match self.eta {
            HolderEta::Sine => {
                T::lit(0.5) + T::lit(SINE_AMPLITUDE) * (T::lit(std::f64::consts::TAU) * x).sin()
            }
            HolderEta::Half => T::lit(0.5),
        }
    }

    pub fn true_eta(&self, x: &[T]) -> Result<T> {
        check_dim(1, x.len())?;
        Ok(self.eta_at(x[0]))
    }

    /// `∫₀¹ η(x) dx`.
    pub fn positive_rate(&self) -> T {
        T::lit(0.5)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Dataset<T> {
        let mut label_rng = stream_rng(seed, LABEL_STREAM);
        let mut feature_rng = stream_rng(seed, FEATURE_STREAM);
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = feature_rng.random();
            let u: f64 = label_rng.random();
            let x = T::lit(x);
            labels.push(if u < self.eta_at(x).as_f64() { Label::Pos } else { Label::Neg });
            features.push(x);
        }
        Dataset::new(1, features, labels, None).expect("sampler produces consistent shapes")
    }

    /// Population confusion matrix of `sign(η(x) - δ)`.
    ///
    /// For the sine shape, `{x : sin 2πx > s}` is the (periodically wrapped) interval
    /// `(a, 1/2 - a)` with `a = asin(s) / 2π`, and `∫ η` over it has a closed form.
    pub fn population_confusion(&self, delta: T) -> Result<ConfusionMatrix<T>> {
        if !(delta > T::zero() && delta < T::one()) {
            return Err(Error::BoundaryThreshold(delta.as_f64()));
        }
        let delta = delta.as_f64();
        let (mass, tp) = match self.eta {
            HolderEta::Half => {
                if 0.5 > delta {
                    (1.0, 0.5)
                } else {
                    (0.0, 0.0)
                }
            }
            HolderEta::Sine => {
                let s = (delta - 0.5) / SINE_AMPLITUDE;
                if s >= 1.0 {
                    (0.0, 0.0)
                } else if s < -1.0 {
                    (1.0, 0.5)
                } else {
                    let tau = std::f64::consts::TAU;
                    let lo = s.asin() / tau;
                    let hi = 0.5 - lo;
                    let mass = hi - lo;
                    let tp = 0.5 * mass + SINE_AMPLITUDE * ((tau * lo).cos() - (tau * hi).cos()) / tau;
                    (mass, tp)
                }
            }
        };
        let fp = mass - tp;
        let fn_ = 0.5 - tp;
        let tn = 1.0 - tp - fp - fn_;
        Ok(ConfusionMatrix::new(T::lit(tp), T::lit(fp), T::lit(fn_), T::lit(tn)))
    }
}

/// Either generative model, as used by scorers and regret evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SynthModel<T> {
    Gaussian(GaussianModel<T>),
    Holder(HolderModel<T>),
}

impl<T: Scalar> SynthModel<T> {
    pub fn dim(&self) -> usize {
        match self {
            SynthModel::Gaussian(g) => g.dim(),
            SynthModel::Holder(_) => 1,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Dataset<T> {
        match self {
            SynthModel::Gaussian(g) => g.sample(n, seed),
            SynthModel::Holder(h) => h.sample(n, seed),
        }
    }

    pub fn true_eta(&self, x: &[T]) -> Result<T> {
        match self {
            SynthModel::Gaussian(g) => g.true_eta(x),
            SynthModel::Holder(h) => h.true_eta(x),
        }
    }

    pub fn population_confusion(&self, delta: T) -> Result<ConfusionMatrix<T>> {
        match self {
            SynthModel::Gaussian(g) => g.population_confusion(delta),
            SynthModel::Holder(h) => h.population_confusion(delta),
        }
    }

    /// Draws one feature vector into `out` (labels drawn from `label_rng`).
    pub(crate) fn draw_features(&self, label_rng: &mut ChaCha20Rng, feature_rng: &mut ChaCha20Rng, out: &mut Vec<T>) {
        out.clear();
        match self {
            SynthModel::Gaussian(g) => {
                let u: f64 = label_rng.random();
                let sign = if u < g.kappa.as_f64() { 1.0 } else { -1.0 };
                for &m in &g.mu {
                    let z: f64 = feature_rng.sample(StandardNormal);
                    out.push(T::lit(z + sign * 0.5 * m.as_f64()));
                }
            }
            SynthModel::Holder(_) => {
                let x: f64 = feature_rng.random();
                out.push(T::lit(x));
            }
        }
    }
}

/// `n` points log-spaced from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Estimated exponent `α` in `P(0 < |η(X) - δ*| ≤ t) ≈ C t^α`: least-squares slope of
/// `log mass(t)` against `log t` over grid points with nonzero mass.
pub fn margin_exponent_estimate<T: Scalar>(eta_values: &[T], delta_star: T, t_grid: &[T]) -> Result<T> {
    const MIN_SAMPLES: usize = 10_000;
    if eta_values.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} eta values, got {}",
            eta_values.len()
        )));
    }
    let limit = delta_star.min(T::one() - delta_star);
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("t grid must be strictly increasing".into()));
    }
    if t_grid.iter().any(|&t| !(t > T::zero() && t < limit)) {
        return Err(Error::InvalidInput(format!("t grid must lie in (0, {limit})")));
    }
    let mut gaps: Vec<f64> = eta_values
        .iter()
        .map(|&e| (e - delta_star).abs().as_f64())
        .filter(|&g| g > 0.0)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let total = eta_values.len() as f64;
    let points: Vec<(f64, f64)> = t_grid
        .iter()
        .filter_map(|&t| {
            let t = t.as_f64();
            let count = gaps.partition_point(|&g| g <= t);
            (count > 0).then(|| (t.ln(), (count as f64 / total).ln()))
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientMass);
    }
    Ok(T::lit(least_squares(&points).0))
}

/// Ordinary least squares `y = slope·x + intercept`; returns `(slope, intercept, r²)`.
pub(crate) fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
