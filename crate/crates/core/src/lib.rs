//! Bayes-optimal binary classification under non-decomposable confusion-matrix
//! metrics.
//!
//! The crate covers the full plug-in pipeline: a registry of confusion-matrix
//! utilities with analytic gradients ([`metric`]), the sign-of-derivative
//! bisection for the optimal threshold and its brute-force oracles
//! ([`threshold`]), conditional-probability estimators ([`estimators`]),
//! generative models with closed-form ground truth ([`synth`]), the two-step
//! classifier with regret evaluation ([`plugin`]) and the convergence-rate
//! harness ([`experiment`]).
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::large_enum_variant)]

pub mod confusion;
pub mod data;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod metric;
pub mod plugin;
pub mod scalar;
pub mod synth;
pub mod threshold;

pub use confusion::{confusion_from_scores, empirical_confusion, ScoredSample};
pub use data::Label;
pub use error::{Error, Result};
pub use estimators::{fit_kernel_smoother, fit_logistic_mle, ScorerSpec};
pub use metric::{MetricKind, SmoothMetric, ThresholdMap};
pub use plugin::{classify, population_regret, train_plugin, EstimatorSpec, EvalMode, PluginClassifier, RegretReport};
pub use scalar::Scalar;
pub use synth::{margin_exponent_estimate, HolderEta};
pub use threshold::{
    binary_search_threshold, brute_force_discrete, direction_vector, fixed_point_threshold, grid_search_threshold,
    h_value, ThresholdResult, ThresholdSearchConfig,
};

pub type ConfusionMatrix = confusion::ConfusionMatrix<f64>;
pub type MetricSpec = metric::MetricSpec<f64>;
pub type Dataset = data::Dataset<f64>;
pub type Scorer = estimators::Scorer<f64>;
pub type KernelSmoother = estimators::KernelSmoother<f64>;
pub type LogisticFitReport = estimators::LogisticFitReport<f64>;
pub type GaussianModel = synth::GaussianModel<f64>;
pub type HolderModel = synth::HolderModel<f64>;
pub type SynthModel = synth::SynthModel<f64>;

pub type ConfusionMatrix32 = confusion::ConfusionMatrix<f32>;
pub type MetricSpec32 = metric::MetricSpec<f32>;
pub type Dataset32 = data::Dataset<f32>;
pub type Scorer32 = estimators::Scorer<f32>;
