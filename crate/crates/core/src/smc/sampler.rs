use super::config::SmcConfig;
use super::system::ParticleSystem;
use super::target::{Tempered, TemperingSequence};
use crate::error::{Error, Result};
use crate::rng::{Purpose, Streams};

/// One transition `pi_{n-1} -> pi_n`: reweight, resample if the ESS falls
/// below `ess_threshold * N`, then `moves` MH steps with the proposal
/// rebased on the particle spread and adapted to the acceptance rate.
pub fn step<T: Tempered + ?Sized>(ps: &mut ParticleSystem, target: &T, cfg: &SmcConfig) -> Result<()> {
    let exec = cfg.execution;
    ps.reweight(target, exec)?;
    let ess = ps.ess();
    ps.ess_history.push(ess);
    let resample = ess < cfg.ess_threshold * ps.len() as f64;
    if resample {
        let mut rng = ps.streams.rng(Purpose::Resample, ps.stage as u64, 0);
        ps.resample(&mut rng);
    }
    ps.resampled.push(resample);
    if cfg.moves > 0 {
        ps.rebase_proposal(target, cfg.scale_factor);
        let rate = ps.mh_move(target, cfg.moves, exec)?;
        ps.adapt_proposal(rate, cfg);
    }
    Ok(())
}

/// Runs the sampler from the prior through every stage of `target`.
pub fn run<T: Tempered + ?Sized>(cfg: &SmcConfig, target: &T) -> Result<ParticleSystem> {
    run_with_streams(cfg, target, Streams::new(cfg.seed))
}

pub fn run_with_streams<T: Tempered + ?Sized>(cfg: &SmcConfig, target: &T, streams: Streams) -> Result<ParticleSystem> {
    cfg.validate()?;
    let mut ps = ParticleSystem::from_prior(target, cfg.particles, streams, cfg.execution)?;
    for _ in 0..target.stages() {
        step(&mut ps, target, cfg)?;
    }
    Ok(ps)
}

/// Builds the batch sequence for `cfg` (data order, or shuffled) and runs.
pub fn run_gp(cfg: &SmcConfig, model: crate::gp::GpModel, prior: crate::priors::PriorSpec) -> Result<(TemperingSequence, ParticleSystem)> {
    cfg.validate()?;
    if model.data.is_empty() {
        return Err(Error::InvalidArgument("the sampler needs at least one data point".into()));
    }
    let streams = Streams::new(cfg.seed);
    let seq = TemperingSequence::partition(model, prior, cfg.batches, cfg.shuffle.then_some(&streams))?;
    let ps = run_with_streams(cfg, &seq, streams)?;
    Ok((seq, ps))
}

/// Appends `new_batch` as `B_{P+1}` and performs exactly one
/// reweight/resample/move cycle. `ps` must sit at the current last stage.
pub fn extend_online(ps: &mut ParticleSystem, seq: &mut TemperingSequence, new_batch: Vec<usize>, cfg: &SmcConfig) -> Result<()> {
    if ps.stage != seq.stages() {
        return Err(Error::InvalidArgument(format!(
            "extend_online needs the system at the last stage {}, found stage {}",
            seq.stages(),
            ps.stage
        )));
    }
    seq.push_batch(new_batch)?;
    step(ps, seq, cfg)
}

/// Like [`extend_online`] for an observation that is not yet in the data.
pub fn extend_with_observation(ps: &mut ParticleSystem, seq: &mut TemperingSequence, input: &[f64], output: f64, cfg: &SmcConfig) -> Result<()> {
    if ps.stage != seq.stages() {
        return Err(Error::InvalidArgument(format!(
            "extend_online needs the system at the last stage {}, found stage {}",
            seq.stages(),
            ps.stage
        )));
    }
    seq.push_observation(input, output)?;
    step(ps, seq, cfg)
}
