//! Conditional-probability estimators behind a common [`Scorer`] type.

mod kernel;
mod logistic;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use kernel::{fit_kernel_smoother, KernelSmoother, DEFAULT_BANDWIDTH_CONST, KERNEL_CLIP};
pub use logistic::{fit_logistic_mle, LogisticFitReport, DEFAULT_LOGISTIC_MAX_ITER, DEFAULT_LOGISTIC_TOL};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};
use crate::synth::SynthModel;

/// An estimate `x ↦ η̂(x) ∈ [0, 1]` of `P(Y = 1 | X = x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Scorer<T> {
    /// The generator's own conditional probability.
    TrueEta(SynthModel<T>),
    /// `sigmoid(wᵀx + b)`.
    Logistic { w: Vec<T>, b: T },
    Kernel(KernelSmoother<T>),
    Constant(T),
}

impl<T: Scalar> Scorer<T> {
    /// Input dimension, or `None` for constants.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Scorer::TrueEta(m) => Some(m.dim()),
            Scorer::Logistic { w, .. } => Some(w.len()),
            Scorer::Kernel(k) => Some(k.dim()),
            Scorer::Constant(_) => None,
        }
    }

    pub fn score(&self, x: &[T]) -> Result<T> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() });
            }
        }
        Ok(match self {
            Scorer::TrueEta(m) => m.true_eta(x)?,
            Scorer::Logistic { w, b } => sigmoid(w.iter().zip(x).map(|(&a, &v)| a * v).sum::<T>() + *b),
            Scorer::Kernel(k) => k.predict(x),
            Scorer::Constant(p) => *p,
        })
    }

    pub fn score_dataset(&self, data: &Dataset<T>) -> Result<Vec<T>> {
        data.rows().map(|x| self.score(x)).collect()
    }

    /// Serializable description. Kernel scorers need a training-file reference.
    pub fn to_spec(&self) -> Result<ScorerSpec<T>> {
        Ok(match self {
            Scorer::TrueEta(m) => ScorerSpec::TrueEta { model: m.clone() },
            Scorer::Logistic { w, b } => ScorerSpec::Logistic { w: w.clone(), b: *b },
            Scorer::Kernel(k) => ScorerSpec::Kernel {
                train_file: k
                    .train_ref()
                    .ok_or_else(|| Error::InvalidInput("kernel scorer has no training-file reference".into()))?
                    .to_string(),
                bandwidth: k.bandwidth(),
                beta: k.beta(),
            },
            Scorer::Constant(p) => ScorerSpec::Constant { p: *p },
        })
    }
}

/// JSON form of a [`Scorer`], tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScorerSpec<T> {
    TrueEta { model: SynthModel<T> },
    Logistic { w: Vec<T>, b: T },
    /// Training data are referenced by path (CSV), relative paths resolved against
    /// the directory passed to [`ScorerSpec::load`].
    Kernel { train_file: String, bandwidth: T, beta: T },
    Constant { p: T },
}

impl<T: Scalar> ScorerSpec<T> {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<Scorer<T>> {
        Ok(match self {
            ScorerSpec::TrueEta { model } => Scorer::TrueEta(model.clone()),
            ScorerSpec::Logistic { w, b } => Scorer::Logistic { w: w.clone(), b: *b },
            ScorerSpec::Kernel { train_file, bandwidth, beta } => {
                let path = match base_dir {
                    Some(dir) if Path::new(train_file).is_relative() => dir.join(train_file),
                    _ => Path::new(train_file).to_path_buf(),
                };
                let data = Dataset::read_csv(&path)?;
                let mut k = KernelSmoother::with_bandwidth(data, *bandwidth, *beta)?;
                k.set_train_ref(train_file.clone());
                Scorer::Kernel(k)
            }
            ScorerSpec::Constant { p } => {
                if !(*p >= T::zero() && *p <= T::one()) {
                    return Err(Error::InvalidInput(format!("constant score {p} outside [0,1]")));
                }
                Scorer::Constant(*p)
            }
        })
    }
}
