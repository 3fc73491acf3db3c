use crate::error::Result;
use crate::gp::GpModel;
use crate::par::Execution;
use crate::priors::PriorSpec;
use crate::rng::Streams;
use crate::smc::{ParticleSystem, TemperingSequence};

/// Importance sampling with the prior as proposal: `n` prior draws weighted
/// by the full-data likelihood.
///
/// This is the sampler with one batch and no moves, drawing from the same
/// `Init` streams, so for a shared seed it reproduces that configuration
/// exactly. The returned system is at stage 1 and its `eval_counter` is `n`.
pub fn prior_importance_sampler(model: &GpModel, prior: &PriorSpec, n: usize, streams: Streams, exec: Execution) -> Result<ParticleSystem> {
    let all: Vec<usize> = (0..model.data.len()).collect();
    let seq = TemperingSequence::new(model.clone(), prior.clone(), vec![all])?;
    let mut ps = ParticleSystem::from_prior(&seq, n, streams, exec)?;
    ps.reweight(&seq, exec)?;
    ps.ess_history.push(ps.ess());
    ps.resampled.push(false);
    Ok(ps)
}
