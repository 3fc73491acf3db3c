//! Sequential Monte Carlo sampler over GP hyperparameters, tempered by
//! adding data batches one at a time.
//!
//! Starting from N prior draws, each stage `n` reweights the particles by
//! `pi_n / pi_{n-1}`, resamples (systematic) when the effective sample size
//! drops below a threshold, and rejuvenates every particle with K
//! random-walk Metropolis-Hastings steps targeting `pi_n`. The value of
//! `log pi_n` at each particle is cached, so a stage costs N evaluations for
//! the reweighting plus one per MH proposal.

mod config;
mod sampler;
mod system;
mod target;

pub use config::SmcConfig;
pub use sampler::{extend_online, extend_with_observation, run, run_gp, run_with_streams, step};
pub use system::{
    log_sum_exp, normalize_log_weights, systematic_indices, ParticleSystem, WeightedSamples, ADAPT_GAIN, MAX_SCALE,
    MIN_SCALE,
};
pub use target::{log_pi, Tempered, TemperingSequence};
