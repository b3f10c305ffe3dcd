//! Confusion matrices of threshold classifiers.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::Scorer;
use crate::scalar::Scalar;

/// Joint probabilities of (prediction, label), laid out as `(TP, FP, FN, TN)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix<T> {
    pub tp: T,
    pub fp: T,
    #[serde(rename = "fn")]
    pub fn_: T,
    pub tn: T,
}

impl<T: Scalar> ConfusionMatrix<T> {
    pub fn new(tp: T, fp: T, fn_: T, tn: T) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn from_array(c: [T; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [T; 4] {
        [self.tp, self.fp, self.fn_, self.tn]
    }

    /// Class marginal `P(Y = +1) = TP + FN`.
    pub fn positive_rate(&self) -> T {
        self.tp + self.fn_
    }

    /// Prediction marginal `P(f = +1) = TP + FP`.
    pub fn predicted_positive_rate(&self) -> T {
        self.tp + self.fp
    }

    pub fn total(&self) -> T {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Checks entries lie in `[0, 1]` and sum to one within `tol`.
    pub fn validate(&self, tol: T) -> Result<()> {
        let entries = self.to_array();
        if entries.iter().any(|&v| !(v >= -tol && v <= T::one() + tol)) {
            return Err(Error::InvalidInput(format!("confusion entries out of [0,1]: {self:?}")));
        }
        if (self.total() - T::one()).abs() > tol {
            return Err(Error::InvalidInput(format!("confusion entries sum to {}", self.total())));
        }
        Ok(())
    }

    pub fn dot(&self, v: &[T; 4]) -> T {
        self.tp * v[0] + self.fp * v[1] + self.fn_ * v[2] + self.tn * v[3]
    }
}

/// Weighted confusion matrix of `sign(score - delta)`; positive iff the score is
/// strictly greater than `delta`.
pub fn confusion_from_scores<T: Scalar>(scores: &[T], delta: T, data: &Dataset<T>) -> Result<ConfusionMatrix<T>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    debug_assert_eq!(scores.len(), data.len());
    let mut c = ConfusionMatrix::default();
    for (i, (&s, label)) in scores.iter().zip(data.labels()).enumerate() {
        let w = data.weight(i);
        match (s > delta, label.is_pos()) {
            (true, true) => c.tp = c.tp + w,
            (true, false) => c.fp = c.fp + w,
            (false, true) => c.fn_ = c.fn_ + w,
            (false, false) => c.tn = c.tn + w,
        }
    }
    Ok(c)
}

/// Empirical confusion matrix of the threshold classifier `(scorer, delta)` on `data`.
pub fn empirical_confusion<T: Scalar>(scorer: &Scorer<T>, delta: T, data: &Dataset<T>) -> Result<ConfusionMatrix<T>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let scores = scorer.score_dataset(data)?;
    confusion_from_scores(&scores, delta, data)
}

/// Scores sorted once so that the confusion matrix at any threshold costs a
/// binary search. Prefix sums are accumulated in `f64`.
#[derive(Debug, Clone)]
pub struct ScoredSample<T> {
    sorted_scores: Vec<T>,
    // cumulative weight of positives / negatives among the first k sorted scores
    cum_pos: Vec<f64>,
    cum_neg: Vec<f64>,
}

impl<T: Scalar> ScoredSample<T> {
    pub fn new(scores: &[T], data: &Dataset<T>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        if scores.len() != data.len() {
            return Err(Error::DimensionMismatch { expected: data.len(), got: scores.len() });
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores are not NaN"));
        let mut cum_pos = Vec::with_capacity(order.len() + 1);
        let mut cum_neg = Vec::with_capacity(order.len() + 1);
        let (mut p, mut q) = (0.0, 0.0);
        cum_pos.push(p);
        cum_neg.push(q);
        for &i in &order {
            let w = data.weight(i).as_f64();
            if data.labels()[i].is_pos() {
                p += w;
            } else {
                q += w;
            }
            cum_pos.push(p);
            cum_neg.push(q);
        }
        let sorted_scores = order.iter().map(|&i| scores[i]).collect();
        Ok(Self { sorted_scores, cum_pos, cum_neg })
    }

    pub fn from_scorer(scorer: &Scorer<T>, data: &Dataset<T>) -> Result<Self> {
        Self::new(&scorer.score_dataset(data)?, data)
    }

    pub fn len(&self) -> usize {
        self.sorted_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_scores.is_empty()
    }

    /// Confusion matrix at `delta`; agrees with [`confusion_from_scores`] up to summation order.
    pub fn confusion(&self, delta: T) -> ConfusionMatrix<T> {
        // first index with score > delta
        let k = self.sorted_scores.partition_point(|&s| s <= delta);
        let n = self.sorted_scores.len();
        let fn_ = self.cum_pos[k];
        let tn = self.cum_neg[k];
        let tp = self.cum_pos[n] - fn_;
        let fp = self.cum_neg[n] - tn;
        ConfusionMatrix::new(T::lit(tp), T::lit(fp), T::lit(fn_), T::lit(tn))
    }
}
