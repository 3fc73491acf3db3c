//! Reference methods the sampler is compared against: a deterministic grid,
//! importance sampling from the prior, and multi-start maximum-likelihood
//! point estimates. All of them produce [`WeightedSamples`](crate::smc::WeightedSamples)
//! (a point estimate is a single unit-weight particle) so they feed the same
//! mixture prediction.

mod grid;
mod importance;
mod optimize;

pub use grid::{grid_posterior, grid_weights, GridAxis, GridSpec, DEFAULT_GRID_CAP};
pub use importance::prior_importance_sampler;
pub use optimize::{bfgs_maximize, optimize_point_estimate, Maximum, OptimizerOptions, PointEstimate, RestartTrace};
