use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, HyperParams};
use crate::par::{self, Execution};
use crate::priors::{Prior, PriorSpec};
use crate::smc::WeightedSamples;

pub const DEFAULT_GRID_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Self { lo, hi, count }
    }

    pub fn nodes(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.lo + step * i as f64).collect()
    }
}

/// Regular grid over the free (non-pinned) coordinates, in unconstrained
/// space, one axis per free coordinate in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_GRID_CAP
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        Self {
            axes,
            cap: DEFAULT_GRID_CAP,
        }
    }

    pub fn size(&self) -> usize {
        self.axes.iter().fold(1usize, |acc, a| acc.saturating_mul(a.count))
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.axes {
            if a.count < 2 || !(a.lo < a.hi) {
                return Err(Error::Config(format!(
                    "grid axis needs count >= 2 and lo < hi, got {a:?}"
                )));
            }
        }
        if self.size() > self.cap {
            return Err(Error::Config(format!(
                "grid of {} nodes exceeds the cap of {}",
                self.size(),
                self.cap
            )));
        }
        Ok(())
    }

    /// Node `flat` as one value per axis (last axis fastest).
    pub fn node(&self, mut flat: usize, nodes: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for k in (0..self.axes.len()).rev() {
            let c = self.axes[k].count;
            out[k] = nodes[k][flat % c];
            flat /= c;
        }
        out
    }
}

/// Normalized weights of `log_density` evaluated on every grid node, with
/// the nodes themselves.
pub fn grid_weights<F>(grid: &GridSpec, exec: Execution, log_density: F) -> Result<(Vec<Vec<f64>>, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    grid.validate()?;
    let nodes: Vec<Vec<f64>> = grid.axes.iter().map(GridAxis::nodes).collect();
    let size = grid.size();
    let points: Vec<Vec<f64>> = (0..size).map(|i| grid.node(i, &nodes)).collect();
    let mut logw = par::try_map_indexed(exec, size, |i| log_density(&points[i]))?;
    crate::smc::normalize_log_weights(&mut logw)?;
    Ok((points, logw.into_iter().map(f64::exp).collect()))
}

/// Deterministic grid approximation of the hyperparameter posterior:
/// weights proportional to prior times marginal likelihood at each node.
/// Pinned coordinates take their fixed values.
pub fn grid_posterior(model: &GpModel, prior: &PriorSpec, grid: &GridSpec, exec: Execution) -> Result<WeightedSamples> {
    prior.check_against(&model.spec)?;
    let free = prior.free_coordinates();
    if free.len() != grid.axes.len() {
        return Err(Error::Config(format!(
            "grid has {} axes but the prior leaves {} coordinates free",
            grid.axes.len(),
            free.len()
        )));
    }
    let embed = |free_values: &[f64]| -> HyperParams {
        let mut theta: Vec<f64> = prior
            .coords
            .iter()
            .map(|p| match p {
                Prior::Fixed { value } => *value,
                _ => 0.0,
            })
            .collect();
        for (k, v) in free.iter().zip(free_values) {
            theta[*k] = *v;
        }
        HyperParams(theta)
    };
    let (points, weights) = grid_weights(grid, exec, |node| {
        let theta = embed(node);
        let lp = prior.log_prior(&theta)?;
        if lp == f64::NEG_INFINITY || model.data.is_empty() {
            return Ok(lp);
        }
        match model.log_marginal_likelihood(&theta) {
            Ok(ll) => Ok(lp + ll),
            Err(Error::Cholesky { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    })?;
    Ok(WeightedSamples {
        particles: points.iter().map(|p| embed(p)).collect(),
        weights,
    })
}
