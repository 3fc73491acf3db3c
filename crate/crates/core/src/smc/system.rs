use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::SmcConfig;
use super::target::{log_pi, Tempered};
use crate::error::{Error, Result};
use crate::gp::HyperParams;
use crate::par::{self, Execution};
use crate::rng::{Purpose, StreamRng, Streams};

pub const MIN_SCALE: f64 = 1e-6;
pub const MAX_SCALE: f64 = 1e2;
/// Gain of the acceptance-rate feedback on the proposal scale.
pub const ADAPT_GAIN: f64 = 1.0;

/// `log sum exp(v)`, -inf for an empty or all -inf input.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Shifts log weights so they exponentiate to a probability vector.
pub fn normalize_log_weights(log_w: &mut [f64]) -> Result<()> {
    if log_w.iter().any(|w| w.is_nan()) {
        return Err(Error::NonFinite("particle log weights"));
    }
    let lse = log_sum_exp(log_w);
    if !lse.is_finite() {
        return Err(Error::Degenerate);
    }
    for w in log_w.iter_mut() {
        *w -= lse;
    }
    Ok(())
}

/// Weighted hyperparameter samples, normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples {
    pub particles: Vec<HyperParams>,
    pub weights: Vec<f64>,
}

impl WeightedSamples {
    pub fn new(particles: Vec<HyperParams>, log_weights: &[f64]) -> Result<Self> {
        if particles.len() != log_weights.len() || particles.is_empty() {
            return Err(Error::InvalidArgument("weighted samples need one weight per particle".into()));
        }
        let mut lw = log_weights.to_vec();
        normalize_log_weights(&mut lw)?;
        let weights = lw.iter().map(|w| w.exp()).collect();
        Ok(Self { particles, weights })
    }

    pub fn single(theta: HyperParams) -> Self {
        Self {
            particles: vec![theta],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        weighted_mean(&self.particles, &self.weights)
    }

    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

fn weighted_mean(particles: &[HyperParams], weights: &[f64]) -> Vec<f64> {
    let d = particles.first().map_or(0, |p| p.len());
    let mut m = vec![0.0; d];
    for (p, w) in particles.iter().zip(weights) {
        for (mk, v) in m.iter_mut().zip(p.iter()) {
            *mk += w * v;
        }
    }
    m
}

/// N weighted particles targeting `pi_stage`, with the cached value of
/// `log pi_stage` at each particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub particles: Vec<HyperParams>,
    /// Normalized: `sum exp(log_weights) = 1`.
    pub log_weights: Vec<f64>,
    pub log_target: Vec<f64>,
    pub stage: usize,
    pub proposal_scale: Vec<f64>,
    /// Running acceptance feedback factor applied on top of the spread-based
    /// base scale.
    pub scale_multiplier: f64,
    pub eval_counter: u64,
    pub acceptance_history: Vec<f64>,
    pub ess_history: Vec<f64>,
    pub resampled: Vec<bool>,
    pub streams: Streams,
}

impl ParticleSystem {
    /// N draws from the prior with uniform weights, stage 0.
    pub fn from_prior<T: Tempered + ?Sized>(target: &T, n: usize, streams: Streams, exec: Execution) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("need at least one particle".into()));
        }
        let particles: Vec<HyperParams> = (0..n)
            .map(|i| target.sample_prior(&mut streams.rng(Purpose::Init, 0, i as u64)))
            .collect();
        let log_target = par::try_map_indexed(exec, n, |i| target.log_prior(&particles[i]))?;
        let d = target.dim();
        let scale = (0..d)
            .map(|k| if target.is_fixed(k) { 0.0 } else { 1.0 })
            .collect();
        Ok(Self {
            log_weights: vec![-(n as f64).ln(); n],
            particles,
            log_target,
            stage: 0,
            proposal_scale: scale,
            scale_multiplier: 1.0,
            eval_counter: 0,
            acceptance_history: Vec::new(),
            ess_history: Vec::new(),
            resampled: Vec::new(),
            streams,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn samples(&self) -> WeightedSamples {
        WeightedSamples {
            particles: self.particles.clone(),
            weights: self.weights(),
        }
    }

    /// `1 / sum w_i^2`.
    pub fn ess(&self) -> f64 {
        1.0 / self.log_weights.iter().map(|w| (2.0 * w).exp()).sum::<f64>()
    }

    pub fn mean(&self) -> Vec<f64> {
        weighted_mean(&self.particles, &self.weights())
    }

    /// Weighted per-coordinate standard deviation.
    pub fn std(&self) -> Vec<f64> {
        let w = self.weights();
        let m = weighted_mean(&self.particles, &w);
        let mut v = vec![0.0; m.len()];
        for (p, wi) in self.particles.iter().zip(&w) {
            for k in 0..m.len() {
                v[k] += wi * (p[k] - m[k]).powi(2);
            }
        }
        v.into_iter().map(f64::sqrt).collect()
    }

    /// Moves from `pi_{n-1}` to `pi_n`:
    /// `log w_i += log pi_n(theta_i) - log pi_{n-1}(theta_i)`, then normalizes.
    pub fn reweight<T: Tempered + ?Sized>(&mut self, target: &T, exec: Execution) -> Result<()> {
        let next = self.stage + 1;
        if next > target.stages() {
            return Err(Error::InvalidArgument(format!(
                "cannot reweight past the last stage {}",
                target.stages()
            )));
        }
        let particles = &self.particles;
        let evaluated = par::try_map_indexed(exec, self.len(), |i| {
            log_pi(target, next, &particles[i]).map_err(|e| e.at_particle(next, i))
        })?;
        for (i, (lp, evals)) in evaluated.into_iter().enumerate() {
            self.eval_counter += evals;
            let prev = self.log_target[i];
            self.log_weights[i] = if prev == f64::NEG_INFINITY || lp == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                self.log_weights[i] + (lp - prev)
            };
            self.log_target[i] = lp;
        }
        self.stage = next;
        normalize_log_weights(&mut self.log_weights)
    }

    /// Systematic resampling with one uniform offset; weights become 1/N.
    pub fn resample(&mut self, rng: &mut StreamRng) {
        let n = self.len();
        let offspring = systematic_indices(&self.weights(), n, rng.random::<f64>());
        self.particles = offspring.iter().map(|&j| self.particles[j].clone()).collect();
        self.log_target = offspring.iter().map(|&j| self.log_target[j]).collect();
        self.log_weights = vec![-(n as f64).ln(); n];
    }

    /// Resets the per-coordinate proposal scale to
    /// `factor * weighted std * multiplier`, clamped, with pinned coordinates
    /// held at zero.
    pub fn rebase_proposal<T: Tempered + ?Sized>(&mut self, target: &T, factor: f64) {
        let std = self.std();
        self.proposal_scale = std
            .iter()
            .enumerate()
            .map(|(k, s)| {
                if target.is_fixed(k) {
                    0.0
                } else {
                    (factor * s * self.scale_multiplier).clamp(MIN_SCALE, MAX_SCALE)
                }
            })
            .collect();
    }

    /// Scales the proposal by `exp(gain * (observed - target))`.
    pub fn adapt_proposal(&mut self, observed_acceptance: f64, cfg: &SmcConfig) {
        let factor = (ADAPT_GAIN * (observed_acceptance - cfg.adapt_target)).exp();
        self.scale_multiplier = (self.scale_multiplier * factor).clamp(MIN_SCALE, MAX_SCALE);
        for h in self.proposal_scale.iter_mut() {
            if *h > 0.0 {
                *h = (*h * factor).clamp(MIN_SCALE, MAX_SCALE);
            }
        }
    }

    /// `moves` Metropolis-Hastings steps per particle targeting
    /// `pi_stage`, with a Gaussian random walk of per-coordinate scale
    /// `proposal_scale`. The walk is symmetric, so the acceptance
    /// probability is `min(1, pi(theta') / pi(theta))`. Returns the fraction
    /// of accepted proposals, which is also appended to the history.
    pub fn mh_move<T: Tempered + ?Sized>(&mut self, target: &T, moves: usize, exec: Execution) -> Result<f64> {
        if moves == 0 || self.is_empty() {
            return Ok(f64::NAN);
        }
        let stage = self.stage;
        let scale = &self.proposal_scale;
        let streams = self.streams;
        let current = &self.particles;
        let cached = &self.log_target;
        let results = par::try_map_indexed(exec, self.len(), |i| {
            let mut rng = streams.rng(Purpose::Move, stage as u64, i as u64);
            mh_chain(target, stage, current[i].clone(), cached[i], scale, moves, &mut rng)
                .map_err(|e| e.at_particle(stage, i))
        })?;
        let mut accepted = 0usize;
        for (i, chain) in results.into_iter().enumerate() {
            self.particles[i] = chain.theta;
            self.log_target[i] = chain.log_target;
            self.eval_counter += chain.evals;
            accepted += chain.accepted;
        }
        let rate = accepted as f64 / (moves * self.len()) as f64;
        self.acceptance_history.push(rate);
        Ok(rate)
    }
}

struct ChainEnd {
    theta: HyperParams,
    log_target: f64,
    evals: u64,
    accepted: usize,
}

fn mh_chain<T: Tempered + ?Sized>(
    target: &T,
    stage: usize,
    mut theta: HyperParams,
    mut current: f64,
    scale: &[f64],
    moves: usize,
    rng: &mut StreamRng,
) -> Result<ChainEnd> {
    let mut evals = 0;
    let mut accepted = 0;
    for _ in 0..moves {
        let mut proposal = theta.clone();
        for (v, h) in proposal.0.iter_mut().zip(scale) {
            if *h > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                *v += h * z;
            }
        }
        let u: f64 = rng.random();
        let (lp, e) = match log_pi(target, stage, &proposal) {
            Ok(v) => v,
            // Proposals where the covariance cannot be factorized are
            // rejected rather than aborting the run.
            Err(Error::Cholesky { .. }) => (f64::NEG_INFINITY, 1),
            Err(e) => return Err(e),
        };
        evals += e;
        let log_ratio = lp - current;
        if lp > f64::NEG_INFINITY && (log_ratio >= 0.0 || u.ln() < log_ratio) {
            theta = proposal;
            current = lp;
            accepted += 1;
        }
    }
    Ok(ChainEnd {
        theta,
        log_target: current,
        evals,
        accepted,
    })
}

/// Indices chosen by systematic resampling: `n` evenly spaced points
/// `(offset + j) / n` are located in the weight CDF.
pub fn systematic_indices(weights: &[f64], n: usize, offset: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut cum = 0.0;
    let mut i = 0;
    for j in 0..n {
        let u = (offset + j as f64) / n as f64 * total;
        while i + 1 < weights.len() && cum + weights[i] <= u {
            cum += weights[i];
            i += 1;
        }
        // Skip zero-weight trailing particles.
        while weights[i] == 0.0 && i + 1 < weights.len() {
            i += 1;
        }
        out.push(i);
    }
    out
}
