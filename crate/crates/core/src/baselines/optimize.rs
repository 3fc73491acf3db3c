use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpModel, HyperParams};
use crate::par::{self, Execution};
use crate::priors::{Prior, PriorSpec};
use crate::rng::{Purpose, Streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS ascent with a backtracking (Armijo) line search. `f` returns the
/// objective and its gradient; points where it fails are treated as
/// infinitely bad during the line search.
pub fn bfgs_maximize<F>(f: F, x0: &[f64], opts: &OptimizerOptions) -> Result<Maximum>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g) = f(x0)?;
    if !fx.is_finite() {
        return Err(Error::NonFinite("objective at the starting point"));
    }
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut converged = g.norm() < opts.gradient_tolerance;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let mut dir = &h * &g;
        if dir.dot(&g) <= 0.0 {
            h = DMatrix::identity(n, n);
            dir = g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + &dir * step;
            if let Ok((fc, gc)) = f(cand.as_slice()) {
                if fc.is_finite() && fc >= fx + 1e-4 * step * slope {
                    accepted = Some((cand, fc, DVector::from_vec(gc)));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else {
            // No ascent possible along the current direction.
            converged = g.norm() < opts.gradient_tolerance;
            break;
        };
        let s = &xn - &x;
        // Gradient of the negated objective changes by -(gn - g).
        let y = &g - &gn;
        let sy = s.dot(&y);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &s * y.transpose() * rho;
            let right = &i - &y * s.transpose() * rho;
            h = &left * &h * &right + &s * s.transpose() * rho;
        }
        let stalled = (fxn - fx).abs() <= f64::EPSILON * fx.abs().max(1.0) && s.norm() <= f64::EPSILON * x.norm().max(1.0);
        x = xn;
        fx = fxn;
        g = gn;
        converged = g.norm() < opts.gradient_tolerance;
        if stalled {
            break;
        }
    }
    Ok(Maximum {
        gradient_norm: g.norm(),
        x: x.iter().copied().collect(),
        value: fx,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub start: HyperParams,
    pub start_log_likelihood: Option<f64>,
    pub theta: Option<HyperParams>,
    pub log_likelihood: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Best maximum-likelihood estimate over several prior-drawn starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub theta: HyperParams,
    pub log_likelihood: f64,
    pub n_restarts_used: usize,
    pub converged: bool,
    pub trace: Vec<RestartTrace>,
}

/// Maximizes the marginal likelihood over the free coordinates from
/// `n_restarts` starting points drawn from the prior (stream
/// `(Restart, r, 0)`), and returns the best optimum.
pub fn optimize_point_estimate(
    model: &GpModel,
    prior: &PriorSpec,
    n_restarts: usize,
    streams: Streams,
    opts: &OptimizerOptions,
    exec: Execution,
) -> Result<PointEstimate> {
    if n_restarts < 1 {
        return Err(Error::Config("need at least one restart".into()));
    }
    if model.data.is_empty() {
        return Err(Error::InvalidArgument("point estimation needs data".into()));
    }
    prior.check_against(&model.spec)?;
    let free = prior.free_coordinates();
    let pinned: Vec<f64> = prior
        .coords
        .iter()
        .map(|p| match p {
            Prior::Fixed { value } => *value,
            _ => 0.0,
        })
        .collect();
    let embed = |v: &[f64]| {
        let mut t = pinned.clone();
        for (k, x) in free.iter().zip(v) {
            t[*k] = *x;
        }
        HyperParams(t)
    };
    let objective = |v: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (ll, grad) = model.log_marginal_likelihood_grad(&embed(v))?;
        Ok((ll, free.iter().map(|k| grad[*k]).collect()))
    };

    let traces = par::map_indexed(exec, n_restarts, |r| {
        let start = prior.sample_one(&mut streams.rng(Purpose::Restart, r as u64, 0));
        let x0: Vec<f64> = free.iter().map(|k| start[*k]).collect();
        let start_ll = model.log_marginal_likelihood(&start).ok();
        match bfgs_maximize(objective, &x0, opts) {
            Ok(m) => {
                let theta = embed(&m.x);
                // Report the likelihood recomputed at the returned point.
                let ll = model.log_marginal_likelihood(&theta).ok();
                RestartTrace {
                    start,
                    start_log_likelihood: start_ll,
                    theta: Some(theta),
                    log_likelihood: ll,
                    iterations: m.iterations,
                    converged: m.converged,
                    error: None,
                }
            }
            Err(e) => RestartTrace {
                start,
                start_log_likelihood: start_ll,
                theta: None,
                log_likelihood: None,
                iterations: 0,
                converged: false,
                error: Some(e.to_string()),
            },
        }
    });

    let best = traces
        .iter()
        .filter_map(|t| Some((t.theta.as_ref()?, t.log_likelihood?, t.converged)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let Some((theta, ll, converged)) = best else {
        return Err(Error::InvalidArgument(format!(
            "all {n_restarts} restarts failed: {}",
            traces[0].error.clone().unwrap_or_default()
        )));
    };
    Ok(PointEstimate {
        theta: theta.clone(),
        log_likelihood: ll,
        n_restarts_used: n_restarts,
        converged,
        trace: traces.clone(),
    })
}
