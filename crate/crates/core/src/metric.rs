//! Confusion-matrix utilities with hand-derived gradients.
//!
//! Every metric is a function `G(C)` of the confusion vector `C = (TP, FP, FN, TN)`.
//! Denominators are guarded by [`Scalar::domain_eps`]; a violation is reported as
//! [`Error::MetricDomain`] rather than clamped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::confusion::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Direction `(1, -1, -1, 1)`: more correct predictions, fewer errors.
pub const KARMIC_DIRECTION: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
/// Direction `(0, -1, 0, 1)`: turning false positives into true negatives.
pub const NEGATIVE_SHIFT: [f64; 4] = [0.0, -1.0, 0.0, 1.0];

/// Closed-form metrics from the standard table of confusion-matrix utilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothMetric<T> {
    Accuracy,
    /// Arithmetic mean of TPR and TNR.
    Am,
    Youden,
    FBeta(T),
    GMean,
    QMean,
    HMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind<T> {
    /// `G(C) = aᵀC / bᵀC`.
    LinearFractional { a: [T; 4], b: [T; 4] },
    Smooth(SmoothMetric<T>),
}

/// A named confusion-matrix utility.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec<T> {
    pub name: String,
    pub kind: MetricKind<T>,
    /// Lower bound `C_B` a karmic sensitivity must clear to count as karmic.
    pub karmic_floor: T,
}

impl<T: Scalar> MetricSpec<T> {
    fn smooth(name: &str, m: SmoothMetric<T>) -> Self {
        Self { name: name.to_string(), kind: MetricKind::Smooth(m), karmic_floor: T::zero() }
    }

    pub fn accuracy() -> Self {
        Self::smooth("accuracy", SmoothMetric::Accuracy)
    }

    pub fn am() -> Self {
        Self::smooth("am", SmoothMetric::Am)
    }

    pub fn youden() -> Self {
        Self::smooth("youden", SmoothMetric::Youden)
    }

    pub fn fbeta(beta: T) -> Self {
        Self::smooth(&format!("fbeta:{beta}"), SmoothMetric::FBeta(beta))
    }

    pub fn f1() -> Self {
        Self::fbeta(T::one())
    }

    pub fn gmean() -> Self {
        Self::smooth("gmean", SmoothMetric::GMean)
    }

    pub fn qmean() -> Self {
        Self::smooth("qmean", SmoothMetric::QMean)
    }

    pub fn hmean() -> Self {
        Self::smooth("hmean", SmoothMetric::HMean)
    }

    pub fn linear_fractional(a: [T; 4], b: [T; 4]) -> Self {
        let join = |v: &[T; 4]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        Self {
            name: format!("linfrac:{}/{}", join(&a), join(&b)),
            kind: MetricKind::LinearFractional { a, b },
            karmic_floor: T::zero(),
        }
    }

    /// Jaccard index `TP / (TP + FP + FN)` as a linear-fractional metric.
    pub fn jaccard() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self::linear_fractional([o, z, z, z], [o, o, o, z])
    }

    pub fn with_karmic_floor(mut self, floor: T) -> Self {
        self.karmic_floor = floor;
        self
    }

    /// One instance of every registered metric family (F1 and Jaccard stand in for
    /// the parameterised ones).
    pub fn registry() -> Vec<Self> {
        vec![
            Self::accuracy(),
            Self::am(),
            Self::youden(),
            Self::f1(),
            Self::jaccard(),
            Self::gmean(),
            Self::qmean(),
            Self::hmean(),
        ]
    }

    /// Parses `accuracy`, `am`, `youden`, `fbeta:<β>`, `f1`, `gmean`, `qmean`, `hmean`,
    /// `jaccard` or `linfrac:<a1,a2,a3,a4>/<b1,b2,b3,b4>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        let num = |t: &str| -> Result<T> {
            t.trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|e| Error::Parse(format!("bad number `{t}` in metric `{s}`: {e}")))
        };
        let quad = |t: &str| -> Result<[T; 4]> {
            let parts: Vec<&str> = t.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("expected 4 coefficients in `{t}`")));
            }
            Ok([num(parts[0])?, num(parts[1])?, num(parts[2])?, num(parts[3])?])
        };
        match lower.as_str() {
            "accuracy" => Ok(Self::accuracy()),
            "am" => Ok(Self::am()),
            "youden" => Ok(Self::youden()),
            "f1" | "fbeta" => Ok(Self::f1()),
            "gmean" => Ok(Self::gmean()),
            "qmean" => Ok(Self::qmean()),
            "hmean" => Ok(Self::hmean()),
            "jaccard" => Ok(Self::jaccard()),
            _ => {
                if let Some(beta) = lower.strip_prefix("fbeta:") {
                    let beta = num(beta)?;
                    if !(beta > T::zero()) {
                        return Err(Error::Parse(format!("F-beta needs beta > 0, got {beta}")));
                    }
                    Ok(Self::fbeta(beta))
                } else if let Some(rest) = lower.strip_prefix("linfrac:") {
                    let (a, b) = rest
                        .split_once('/')
                        .ok_or_else(|| Error::Parse(format!("linfrac needs `a/b`, got `{rest}`")))?;
                    Ok(Self::linear_fractional(quad(a)?, quad(b)?))
                } else {
                    Err(Error::Parse(format!("unknown metric `{s}`")))
                }
            }
        }
    }

    /// `G(C)`.
    pub fn value(&self, c: &ConfusionMatrix<T>) -> Result<T> {
        let eps = T::domain_eps();
        match self.kind {
            MetricKind::LinearFractional { a, b } => linfrac_value(&a, &b, c),
            MetricKind::Smooth(m) => match m {
                SmoothMetric::Accuracy => Ok(c.tp + c.tn),
                SmoothMetric::FBeta(beta) => {
                    let (a, b) = fbeta_coefficients(beta);
                    linfrac_value(&a, &b, c)
                }
                _ => {
                    let r = Rates::new(c, eps)?;
                    let two = T::lit(2.0);
                    match m {
                        SmoothMetric::Am => Ok((r.tpr + r.tnr) / two),
                        SmoothMetric::Youden => Ok(r.tpr + r.tnr - T::one()),
                        SmoothMetric::GMean => {
                            let prod = r.tpr * r.tnr;
                            guard(prod, eps, "TPR·TNR")?;
                            Ok(prod.sqrt())
                        }
                        SmoothMetric::QMean => {
                            let root = qmean_root(&r);
                            guard(root, eps, "Q-mean radius")?;
                            Ok(T::one() - root)
                        }
                        SmoothMetric::HMean => {
                            guard(c.tp, eps, "TP")?;
                            guard(c.tn, eps, "TN")?;
                            Ok(two / (r.pos / c.tp + r.neg / c.tn))
                        }
                        SmoothMetric::Accuracy | SmoothMetric::FBeta(_) => unreachable!(),
                    }
                }
            },
        }
    }

    /// Analytic `∇G(C)`.
    pub fn gradient(&self, c: &ConfusionMatrix<T>) -> Result<[T; 4]> {
        let eps = T::domain_eps();
        let z = T::zero();
        match self.kind {
            MetricKind::LinearFractional { a, b } => linfrac_gradient(&a, &b, c),
            MetricKind::Smooth(m) => match m {
                SmoothMetric::Accuracy => Ok([T::one(), z, z, T::one()]),
                SmoothMetric::FBeta(beta) => {
                    let (a, b) = fbeta_coefficients(beta);
                    linfrac_gradient(&a, &b, c)
                }
                _ => {
                    let r = Rates::new(c, eps)?;
                    let two = T::lit(2.0);
                    // ∂TPR and ∂TNR with respect to (TP, FP, FN, TN)
                    let d_tpr = [c.fn_ / (r.pos * r.pos), z, -c.tp / (r.pos * r.pos), z];
                    let d_tnr = [z, -c.tn / (r.neg * r.neg), z, c.fp / (r.neg * r.neg)];
                    let combine = |u: T, v: T| -> [T; 4] {
                        let mut g = [z; 4];
                        for j in 0..4 {
                            g[j] = u * d_tpr[j] + v * d_tnr[j];
                        }
                        g
                    };
                    match m {
                        SmoothMetric::Am => Ok(combine(T::lit(0.5), T::lit(0.5))),
                        SmoothMetric::Youden => Ok(combine(T::one(), T::one())),
                        SmoothMetric::GMean => {
                            let prod = r.tpr * r.tnr;
                            guard(prod, eps, "TPR·TNR")?;
                            let g = prod.sqrt();
                            Ok(combine(r.tnr / (two * g), r.tpr / (two * g)))
                        }
                        SmoothMetric::QMean => {
                            let root = qmean_root(&r);
                            guard(root, eps, "Q-mean radius")?;
                            let fnr = T::one() - r.tpr;
                            let fpr = T::one() - r.tnr;
                            Ok(combine(fnr / (two * root), fpr / (two * root)))
                        }
                        SmoothMetric::HMean => {
                            guard(c.tp, eps, "TP")?;
                            guard(c.tn, eps, "TN")?;
                            let s = T::one() / r.tpr + T::one() / r.tnr;
                            let k = two / (s * s);
                            Ok(combine(k / (r.tpr * r.tpr), k / (r.tnr * r.tnr)))
                        }
                        SmoothMetric::Accuracy | SmoothMetric::FBeta(_) => unreachable!(),
                    }
                }
            },
        }
    }

    /// `∇G(C)ᵀ(1, -1, -1, 1)`.
    pub fn karmic_sensitivity(&self, c: &ConfusionMatrix<T>) -> Result<T> {
        let g = self.gradient(c)?;
        Ok(dot(&g, &KARMIC_DIRECTION.map(T::lit)))
    }

    /// Whether the karmic sensitivity at `c` clears `karmic_floor` (strictly positive
    /// when the floor is zero).
    pub fn is_karmic_at(&self, c: &ConfusionMatrix<T>) -> Result<bool> {
        let k = self.karmic_sensitivity(c)?;
        Ok(if self.karmic_floor > T::zero() { k >= self.karmic_floor } else { k > T::zero() })
    }

    /// Optimal threshold implied by `c`: `∇Gᵀ(0,-1,0,1) / ∇Gᵀ(1,-1,-1,1)`.
    pub fn threshold_map(&self, c: &ConfusionMatrix<T>) -> Result<ThresholdMap<T>> {
        let g = self.gradient(c)?;
        let den = dot(&g, &KARMIC_DIRECTION.map(T::lit));
        if !(den > T::zero()) {
            return Err(Error::NonKarmicPoint(den.as_f64()));
        }
        let raw = dot(&g, &NEGATIVE_SHIFT.map(T::lit)) / den;
        let tol = T::lit(1e-9);
        Ok(ThresholdMap {
            value: raw.max(T::zero()).min(T::one()),
            raw,
            out_of_range: raw < -tol || raw > T::one() + tol,
        })
    }
}

/// Result of [`MetricSpec::threshold_map`]: the ratio clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdMap<T> {
    pub value: T,
    pub raw: T,
    /// Set when `raw` left `[0, 1]` by more than `1e-9`.
    pub out_of_range: bool,
}

impl<T: Scalar> fmt::Display for MetricSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl<T: Scalar> FromStr for MetricSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl<T: Scalar> Serialize for MetricSpec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for MetricSpec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// `a`, `b` with `F_β = (1+β²)TP / ((1+β²)TP + FP + β²FN)`.
fn fbeta_coefficients<T: Scalar>(beta: T) -> ([T; 4], [T; 4]) {
    let b2 = beta * beta;
    let z = T::zero();
    ([T::one() + b2, z, z, z], [T::one() + b2, T::one(), b2, z])
}

fn linfrac_value<T: Scalar>(a: &[T; 4], b: &[T; 4], c: &ConfusionMatrix<T>) -> Result<T> {
    let den = c.dot(b);
    guard(den.abs(), T::domain_eps(), "bᵀC")?;
    Ok(c.dot(a) / den)
}

fn linfrac_gradient<T: Scalar>(a: &[T; 4], b: &[T; 4], c: &ConfusionMatrix<T>) -> Result<[T; 4]> {
    let den = c.dot(b);
    guard(den.abs(), T::domain_eps(), "bᵀC")?;
    let num = c.dot(a);
    let den2 = den * den;
    let mut g = [T::zero(); 4];
    for j in 0..4 {
        g[j] = (a[j] * den - b[j] * num) / den2;
    }
    Ok(g)
}

struct Rates<T> {
    pos: T,
    neg: T,
    tpr: T,
    tnr: T,
}

impl<T: Scalar> Rates<T> {
    fn new(c: &ConfusionMatrix<T>, eps: T) -> Result<Self> {
        let pos = c.tp + c.fn_;
        let neg = c.fp + c.tn;
        guard(pos, eps, "TP+FN")?;
        guard(neg, eps, "FP+TN")?;
        Ok(Self { pos, neg, tpr: c.tp / pos, tnr: c.tn / neg })
    }
}

fn qmean_root<T: Scalar>(r: &Rates<T>) -> T {
    let fnr = T::one() - r.tpr;
    let fpr = T::one() - r.tnr;
    ((fnr * fnr + fpr * fpr) / T::lit(2.0)).sqrt()
}

fn guard<T: Scalar>(v: T, eps: T, what: &str) -> Result<()> {
    if v > eps {
        Ok(())
    } else {
        Err(Error::MetricDomain(format!("{what} = {v} is not above {eps}")))
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(u: &[T; 4], v: &[T; 4]) -> T {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2] + u[3] * v[3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cm(tp: f64, fp: f64, fn_: f64, tn: f64) -> ConfusionMatrix<f64> {
        ConfusionMatrix::new(tp, fp, fn_, tn)
    }

    #[test]
    fn table_values() {
        let c = cm(0.4, 0.1, 0.1, 0.4);
        assert_relative_eq!(MetricSpec::accuracy().value(&c).unwrap(), 0.8, epsilon = 1e-15);
        // 2·0.4 / (2·0.4 + 0.1 + 0.1)
        assert_relative_eq!(MetricSpec::f1().value(&c).unwrap(), 0.8, epsilon = 1e-15);
        let q = cm(0.25, 0.25, 0.25, 0.25);
        assert_relative_eq!(MetricSpec::hmean().value(&q).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(MetricSpec::am().value(&q).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(MetricSpec::youden().value(&q).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(MetricSpec::gmean().value(&q).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(MetricSpec::qmean().value(&q).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fbeta_weights_recall() {
        // F2 = 5TP / (5TP + 4FN + FP)
        let c = cm(0.3, 0.1, 0.2, 0.4);
        let f2 = MetricSpec::fbeta(2.0).value(&c).unwrap();
        assert_relative_eq!(f2, 1.5 / (1.5 + 0.8 + 0.1), epsilon = 1e-15);
    }

    #[test]
    fn accuracy_gradient_is_constant() {
        let g = MetricSpec::accuracy().gradient(&cm(0.1, 0.2, 0.3, 0.4)).unwrap();
        assert_eq!(g, [1.0, 0.0, 0.0, 1.0]);
        assert_eq!(MetricSpec::accuracy().karmic_sensitivity(&cm(0.1, 0.2, 0.3, 0.4)).unwrap(), 2.0);
    }

    #[test]
    fn f1_karmic_sensitivity_is_two_over_denominator() {
        // ∇F1 = (2(FP+FN), -2TP, -2TP, 0) / D², D = 2TP+FP+FN, so ∇F1ᵀ(1,-1,-1,1) = 2/D.
        let m = MetricSpec::f1();
        let c = cm(0.4, 0.1, 0.1, 0.4);
        let g = m.gradient(&c).unwrap();
        assert_relative_eq!(g[0], 0.4, epsilon = 1e-15);
        assert_relative_eq!(g[1], -0.8, epsilon = 1e-15);
        assert_relative_eq!(g[2], -0.8, epsilon = 1e-15);
        assert_eq!(g[3], 0.0);
        assert_relative_eq!(m.karmic_sensitivity(&c).unwrap(), 2.0, epsilon = 1e-14);
        // separable data: D = 2π, sensitivity 1/π stays positive
        let pi = 0.3;
        assert_relative_eq!(m.karmic_sensitivity(&cm(pi, 0.0, 0.0, 1.0 - pi)).unwrap(), 1.0 / pi, epsilon = 1e-12);
    }

    #[test]
    fn threshold_map_values() {
        let c = cm(0.2, 0.15, 0.05, 0.6);
        assert_eq!(MetricSpec::accuracy().threshold_map(&c).unwrap().value, 0.5);
        // AM threshold equals the positive class proportion
        assert_relative_eq!(MetricSpec::am().threshold_map(&c).unwrap().value, 0.25, epsilon = 1e-14);
        // F1 threshold equals F1 / 2
        let f1 = MetricSpec::f1();
        assert_relative_eq!(
            f1.threshold_map(&c).unwrap().value,
            f1.value(&c).unwrap() / 2.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn domain_violations_error() {
        let no_pos = cm(0.0, 0.5, 0.0, 0.5);
        for m in [MetricSpec::am(), MetricSpec::youden(), MetricSpec::gmean(), MetricSpec::qmean(), MetricSpec::hmean()] {
            assert!(matches!(m.value(&no_pos), Err(Error::MetricDomain(_))), "{}", m.name);
            assert!(matches!(m.gradient(&no_pos), Err(Error::MetricDomain(_))), "{}", m.name);
        }
        let empty_f1 = cm(0.0, 0.0, 0.0, 1.0);
        assert!(matches!(MetricSpec::f1().value(&empty_f1), Err(Error::MetricDomain(_))));
        let perfect = cm(0.5, 0.0, 0.0, 0.5);
        assert!(matches!(MetricSpec::qmean().gradient(&perfect), Err(Error::MetricDomain(_))));
    }

    #[test]
    fn non_karmic_point_is_reported() {
        // a linear-fractional metric that rewards false positives
        let m = MetricSpec::linear_fractional([0.0, 1.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(m.threshold_map(&cm(0.25, 0.25, 0.25, 0.25)), Err(Error::NonKarmicPoint(_))));
        assert!(!m.is_karmic_at(&cm(0.25, 0.25, 0.25, 0.25)).unwrap());
    }

    #[test]
    fn parse_round_trips_names() {
        for m in MetricSpec::<f64>::registry() {
            let again = MetricSpec::<f64>::parse(&m.name).unwrap();
            assert_eq!(again.kind, m.kind);
        }
        let lf = MetricSpec::<f64>::parse("linfrac:1,0,0,1/0,0,0,0.5").unwrap();
        assert_eq!(lf.kind, MetricKind::LinearFractional { a: [1.0, 0.0, 0.0, 1.0], b: [0.0, 0.0, 0.0, 0.5] });
        assert!(MetricSpec::<f64>::parse("fbeta:0").is_err());
        assert!(MetricSpec::<f64>::parse("linfrac:1,2/3,4").is_err());
        assert!(MetricSpec::<f64>::parse("precision@k").is_err());
        assert_eq!(MetricSpec::<f64>::parse("fbeta:1").unwrap().name, "fbeta:1");
    }

    #[test]
    fn works_in_single_precision() {
        let c = ConfusionMatrix::<f32>::new(0.4, 0.1, 0.1, 0.4);
        assert!((MetricSpec::<f32>::f1().value(&c).unwrap() - 0.8).abs() < 1e-6);
        assert!((MetricSpec::<f32>::hmean().threshold_map(&c).unwrap().value - 0.5).abs() < 1e-6);
    }
}
