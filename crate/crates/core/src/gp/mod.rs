//! Gaussian-process regression with squared-exponential kernels.

mod data;
pub mod metrics;
mod model;
mod sparse;
mod spec;

pub use data::Dataset;
pub use metrics::{msll, msll_from_log_density, smse};
pub use model::{cholesky_with_jitter, GpModel, PredictiveGaussian};
pub use spec::{HyperParams, KernelFamily, KernelSpec, MeanSpec, ModelSpec};

pub(crate) use model::normal_logpdf;
