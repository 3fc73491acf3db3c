//! Marginalized predictive distribution: a weighted mixture of the GP
//! predictives conditioned on each hyperparameter sample,
//! `p(y* | x*, y, x) ≈ sum_i w_i p(y* | x*, y, x, theta_i)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{normal_logpdf, GpModel, HyperParams, PredictiveGaussian};
use crate::par::{self, Execution};
use crate::smc::{log_sum_exp, WeightedSamples};

/// How each component is computed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    #[default]
    Exact,
    /// Subset of regressors with these training rows as inducing points.
    SubsetOfRegressors(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveMixture {
    pub components: Vec<PredictiveGaussian>,
    pub weights: Vec<f64>,
}

pub fn mixture_predict(samples: &WeightedSamples, model: &GpModel, xstar: &DMatrix<f64>, exec: Execution) -> Result<PredictiveMixture> {
    mixture_predict_with(samples, model, xstar, &Predictor::Exact, false, exec)
}

pub fn mixture_predict_with(
    samples: &WeightedSamples,
    model: &GpModel,
    xstar: &DMatrix<f64>,
    predictor: &Predictor,
    want_cov: bool,
    exec: Execution,
) -> Result<PredictiveMixture> {
    if samples.is_empty() || samples.weights.len() != samples.len() {
        return Err(Error::InvalidArgument("mixture needs one weight per sample".into()));
    }
    let total: f64 = samples.weights.iter().sum();
    if !(total > 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("sample weights sum to {total}, expected 1")));
    }
    let components = par::try_map_indexed(exec, samples.len(), |i| {
        let theta: &HyperParams = &samples.particles[i];
        match predictor {
            Predictor::Exact => model.predict(theta, xstar, want_cov),
            Predictor::SubsetOfRegressors(u) => model.predict_sor(theta, u, xstar),
        }
    })?;
    Ok(PredictiveMixture {
        components,
        weights: samples.weights.clone(),
    })
}

impl PredictiveMixture {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn points(&self) -> usize {
        self.components.first().map_or(0, PredictiveGaussian::len)
    }

    /// Per-point mean `sum w_i mu_i` and variance
    /// `sum w_i (s_i^2 + mu_i^2) - mean^2`.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.points();
        let mut mean = vec![0.0; m];
        let mut second = vec![0.0; m];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for j in 0..m {
                mean[j] += w * c.mean[j];
                second[j] += w * (c.variance[j] + c.mean[j] * c.mean[j]);
            }
        }
        let var = mean.iter().zip(&second).map(|(mu, s)| (s - mu * mu).max(0.0)).collect();
        (mean, var)
    }

    /// Per-point `log sum_i w_i N(y_j; mu_ij, s_ij^2)`, evaluated in log space.
    pub fn log_pdf(&self, ystar: &[f64]) -> Result<Vec<f64>> {
        if ystar.len() != self.points() {
            return Err(Error::Dimension {
                context: "mixture targets",
                expected: self.points(),
                actual: ystar.len(),
            });
        }
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        Ok((0..ystar.len())
            .map(|j| {
                let terms: Vec<f64> = self
                    .components
                    .iter()
                    .zip(&log_w)
                    .map(|(c, lw)| lw + normal_logpdf(ystar[j], c.mean[j], c.variance[j]))
                    .collect();
                log_sum_exp(&terms)
            })
            .collect())
    }

    /// Sum of the per-point log densities.
    pub fn total_log_pdf(&self, ystar: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(ystar)?.iter().sum())
    }

    /// Moment-matched single Gaussian, for metrics that take one.
    pub fn moment_matched(&self) -> PredictiveGaussian {
        let (mean, variance) = self.moments();
        PredictiveGaussian {
            mean,
            variance,
            covariance: None,
        }
    }
}

/// `lambda * a + (1 - lambda) * b` as one weighted sample set.
pub fn blend(a: &WeightedSamples, b: &WeightedSamples, lambda: f64) -> WeightedSamples {
    let mut particles = a.particles.clone();
    particles.extend(b.particles.iter().cloned());
    let mut weights: Vec<f64> = a.weights.iter().map(|w| lambda * w).collect();
    weights.extend(b.weights.iter().map(|w| (1.0 - lambda) * w));
    WeightedSamples { particles, weights }
}
