//! Gaussian-process regression with hyperparameters marginalized by a
//! data-tempered sequential Monte Carlo sampler.
//!
//! * [`gp`]: kernels, mean functions, marginal likelihood (with gradient),
//!   exact and subset-of-regressors prediction, SMSE/MSLL.
//! * [`priors`]: coordinatewise hyperparameter priors.
//! * [`smc`]: the sampler, including online extension by new batches.
//! * [`baselines`]: grid marginalization, prior importance sampling and
//!   multi-start maximum-likelihood point estimates.
//! * [`prediction`]: the weighted mixture of per-particle GP predictives.
//! * [`changepoint`]: run-length message passing with SMC-marginalized GP
//!   segment predictives.
//! * [`io`]: configuration, CSV/JSON artifacts and the command drivers used
//!   by the `gpsmc` binary.

pub mod baselines;
pub mod changepoint;
pub mod error;
pub mod gp;
pub mod io;
pub mod par;
pub mod prediction;
pub mod priors;
pub mod rng;
pub mod smc;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
