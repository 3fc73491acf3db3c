use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

/// Tuning of the sampler: `particles` (N), `batches` (P), `moves` (K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcConfig {
    pub particles: usize,
    pub batches: usize,
    pub moves: usize,
    /// Resample when ESS < ess_threshold * N. Zero disables resampling.
    pub ess_threshold: f64,
    /// Acceptance rate the proposal scale is steered towards.
    pub adapt_target: f64,
    /// Base proposal scale as a multiple of the weighted particle std.
    pub scale_factor: f64,
    /// Shuffle data (seeded) before cutting it into batches.
    pub shuffle: bool,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            particles: 100,
            batches: 10,
            moves: 5,
            ess_threshold: 0.5,
            adapt_target: 0.3,
            scale_factor: 0.5,
            shuffle: false,
            seed: 0,
            execution: Execution::Parallel,
        }
    }
}

impl SmcConfig {
    pub const PRESETS: [&'static str; 3] = ["default", "sarcos", "changepoint"];

    /// Named particle/batch/move settings. `sarcos` is N=15, P=20, K=5 and
    /// `changepoint` is N=25 with K=2 moves per online extension.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "default" => Ok(base),
            "sarcos" => Ok(Self {
                particles: 15,
                batches: 20,
                moves: 5,
                ..base
            }),
            "changepoint" => Ok(Self {
                particles: 25,
                batches: 1,
                moves: 2,
                ..base
            }),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected one of {:?})",
                Self::PRESETS
            ))),
        }
    }

    /// Overwrite the N/P/K fields from a preset, keeping everything else.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let p = Self::preset(name)?;
        self.particles = p.particles;
        self.batches = p.batches;
        self.moves = p.moves;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config(format!("need at least 2 particles, got {}", self.particles)));
        }
        if self.batches < 1 {
            return Err(Error::Config("need at least one batch".into()));
        }
        if !(0.0..=1.0).contains(&self.ess_threshold) {
            return Err(Error::Config(format!("ess_threshold {} outside [0, 1]", self.ess_threshold)));
        }
        if !(self.adapt_target > 0.0 && self.adapt_target < 1.0) {
            return Err(Error::Config(format!("adapt_target {} outside (0, 1)", self.adapt_target)));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor.is_finite()) {
            return Err(Error::Config("scale_factor must be positive".into()));
        }
        Ok(())
    }

    /// `2 N P K + N P`: every stage reweights N particles and each MH step
    /// costs at most one new target evaluation thanks to caching, so the
    /// uncached `2 N P K` plus the reweighting cost bounds the count.
    pub fn eval_upper_bound(&self) -> u64 {
        let (n, p, k) = (self.particles as u64, self.batches as u64, self.moves as u64);
        2 * n * p * k + n * p
    }
}
