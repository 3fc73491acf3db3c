use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::data::Dataset;
use super::spec::{HyperParams, ModelSpec};
use crate::error::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Cholesky factor of `k`, retrying with diagonal jitter growing from
/// 1e-10 to 1e-4 times the mean diagonal, in factors of ten.
pub fn cholesky_with_jitter(k: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok(c);
    }
    let n = k.nrows();
    let mean_diag = if n == 0 { 1.0 } else { k.diagonal().sum() / n as f64 };
    let mut rel = JITTER_START;
    let mut last = 0.0;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        last = rel * mean_diag.abs();
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += last;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok(c);
        }
        rel *= 10.0;
    }
    Err(Error::Cholesky { jitter: last })
}

/// Mean and marginal variance (or full covariance) of noisy outputs at
/// query inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveGaussian {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub covariance: Option<DMatrix<f64>>,
}

impl PredictiveGaussian {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }

    /// Per-point Gaussian log-density.
    pub fn log_pdf(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.len() {
            return Err(Error::Dimension {
                context: "predictive targets",
                expected: self.len(),
                actual: y.len(),
            });
        }
        y.iter()
            .zip(self.mean.iter().zip(&self.variance))
            .map(|(y, (m, v))| {
                if *v > 0.0 {
                    Ok(normal_logpdf(*y, *m, *v))
                } else {
                    Err(Error::InvalidArgument(format!("non-positive predictive variance {v}")))
                }
            })
            .collect()
    }
}

pub(crate) fn normal_logpdf(y: f64, mean: f64, var: f64) -> f64 {
    let r = y - mean;
    -0.5 * ((2.0 * PI * var).ln() + r * r / var)
}

/// A GP prior paired with a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    pub spec: ModelSpec,
    pub data: Dataset,
}

/// Factorized training covariance for a fixed `theta`.
pub(crate) struct Posterior {
    pub chol: Cholesky<f64, Dyn>,
    pub residual: DVector<f64>,
    pub alpha: DVector<f64>,
}

impl GpModel {
    pub fn new(spec: ModelSpec, data: Dataset) -> Result<Self> {
        if data.input_dim() != spec.input_dim() {
            return Err(Error::Dimension {
                context: "dataset input dimension",
                expected: spec.input_dim(),
                actual: data.input_dim(),
            });
        }
        Ok(Self { spec, data })
    }

    /// The same prior restricted to a subset of training rows.
    pub fn subset(&self, rows: &[usize]) -> GpModel {
        GpModel {
            spec: self.spec,
            data: self.data.select(rows),
        }
    }

    pub fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    pub fn kernel(&self, theta: &HyperParams, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.spec.kernel.matrix(theta.kernel_params(&self.spec), a, b)
    }

    pub fn mean(&self, theta: &HyperParams, x: &DMatrix<f64>) -> Vec<f64> {
        self.spec.mean.eval(theta.mean_params(&self.spec), x)
    }

    /// `K(X, X) + noise * I`.
    pub fn train_covariance(&self, theta: &HyperParams) -> Result<DMatrix<f64>> {
        let mut k = self.kernel(theta, &self.data.x, &self.data.x)?;
        let noise = theta.noise_variance(&self.spec);
        for i in 0..k.nrows() {
            k[(i, i)] += noise;
        }
        Ok(k)
    }

    pub(crate) fn posterior(&self, theta: &HyperParams) -> Result<Posterior> {
        theta.check(&self.spec)?;
        let k = self.train_covariance(theta)?;
        let chol = cholesky_with_jitter(k)?;
        let m = self.mean(theta, &self.data.x);
        let residual = DVector::from_fn(self.data.len(), |i, _| self.data.y[i] - m[i]);
        let alpha = chol.solve(&residual);
        Ok(Posterior { chol, residual, alpha })
    }

    /// `log N(y; m(X), K(X, X) + noise * I)`.
    pub fn log_marginal_likelihood(&self, theta: &HyperParams) -> Result<f64> {
        if self.data.is_empty() {
            return Err(Error::InvalidArgument("log marginal likelihood of an empty dataset".into()));
        }
        let post = self.posterior(theta)?;
        Ok(log_likelihood_from(&post))
    }

    /// Log marginal likelihood and its gradient with respect to every
    /// hyperparameter coordinate (log coordinates differentiated in log space).
    pub fn log_marginal_likelihood_grad(&self, theta: &HyperParams) -> Result<(f64, Vec<f64>)> {
        if self.data.is_empty() {
            return Err(Error::InvalidArgument("log marginal likelihood of an empty dataset".into()));
        }
        let spec = &self.spec;
        let post = self.posterior(theta)?;
        let lml = log_likelihood_from(&post);
        let n = self.data.len();
        let x = &self.data.x;

        let kinv = post.chol.inverse();
        // W = alpha alpha^T - K^-1; dL/dp = 0.5 tr(W dK/dp)
        let w = &post.alpha * post.alpha.transpose() - &kinv;
        let kf = self.kernel(theta, x, x)?;
        let (inv_ls2, _) = spec.kernel.unpack(theta.kernel_params(spec));

        let mut grad = vec![0.0; spec.n_params()];
        let nl = spec.kernel.n_lengthscales();
        let ard = matches!(spec.kernel.family, super::spec::KernelFamily::SquaredExponentialArd);
        for i in 0..n {
            for j in 0..n {
                let wk = w[(i, j)] * kf[(i, j)];
                if wk == 0.0 {
                    continue;
                }
                for d in 0..spec.input_dim() {
                    let diff = x[(i, d)] - x[(j, d)];
                    // d/d(log l) of exp(-0.5 diff^2 / l^2) = diff^2 / l^2 * k
                    let g = wk * diff * diff * inv_ls2[d];
                    if ard {
                        grad[d] += 0.5 * g;
                    } else {
                        grad[0] += 0.5 * g;
                    }
                }
                grad[nl] += 0.5 * wk;
            }
        }
        let noise = theta.noise_variance(spec);
        grad[spec.noise_index()] = 0.5 * noise * w.trace();

        let jac = spec.mean.jacobian(x);
        let mg = jac.transpose() * &post.alpha;
        for (slot, v) in spec.mean_range().zip(mg.iter()) {
            grad[slot] = *v;
        }
        Ok((lml, grad))
    }

    /// Predictive distribution of noisy outputs at `xstar`. With no training
    /// data this is the prior predictive.
    pub fn predict(&self, theta: &HyperParams, xstar: &DMatrix<f64>, want_cov: bool) -> Result<PredictiveGaussian> {
        theta.check(&self.spec)?;
        if xstar.ncols() != self.spec.input_dim() {
            return Err(Error::Dimension {
                context: "query input dimension",
                expected: self.spec.input_dim(),
                actual: xstar.ncols(),
            });
        }
        let noise = theta.noise_variance(&self.spec);
        let prior_mean = self.mean(theta, xstar);
        let kss_diag: Vec<f64> = if want_cov {
            Vec::new()
        } else {
            vec![theta.signal_variance(&self.spec); xstar.nrows()]
        };

        if self.data.is_empty() {
            let covariance = if want_cov {
                let mut c = self.kernel(theta, xstar, xstar)?;
                for i in 0..c.nrows() {
                    c[(i, i)] += noise;
                }
                Some(c)
            } else {
                None
            };
            let variance = match &covariance {
                Some(c) => c.diagonal().iter().copied().collect(),
                None => kss_diag.iter().map(|v| v + noise).collect(),
            };
            return Ok(PredictiveGaussian {
                mean: prior_mean,
                variance,
                covariance,
            });
        }

        let post = self.posterior(theta)?;
        let ks = self.kernel(theta, &self.data.x, xstar)?;
        let mean_adj = ks.transpose() * &post.alpha;
        let mean: Vec<f64> = prior_mean.iter().zip(mean_adj.iter()).map(|(a, b)| a + b).collect();
        let v = post.chol.l().solve_lower_triangular(&ks).ok_or(Error::NonFinite("triangular solve"))?;

        if want_cov {
            let kss = self.kernel(theta, xstar, xstar)?;
            let mut cov = kss - v.transpose() * &v;
            cov = (&cov + cov.transpose()) * 0.5;
            for i in 0..cov.nrows() {
                cov[(i, i)] = cov[(i, i)].max(0.0) + noise;
            }
            let variance = cov.diagonal().iter().copied().collect();
            Ok(PredictiveGaussian {
                mean,
                variance,
                covariance: Some(cov),
            })
        } else {
            let variance = (0..xstar.nrows())
                .map(|j| {
                    let reduction: f64 = v.column(j).iter().map(|a| a * a).sum();
                    (kss_diag[j] - reduction).max(0.0) + noise
                })
                .collect();
            Ok(PredictiveGaussian {
                mean,
                variance,
                covariance: None,
            })
        }
    }
}

fn log_likelihood_from(post: &Posterior) -> f64 {
    let n = post.residual.len() as f64;
    let log_det_half: f64 = post.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * post.residual.dot(&post.alpha) - log_det_half - 0.5 * n * (2.0 * PI).ln()
}
