use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[serde(alias = "se_iso")]
    SquaredExponentialIso,
    #[serde(alias = "se_ard")]
    SquaredExponentialArd,
}

/// Squared-exponential covariance. Parameters, all in log space:
/// length-scales (one for Iso, `input_dim` for ARD) followed by the signal
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub input_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanSpec {
    Zero,
    /// One natural-space offset.
    Constant,
    /// Intercept followed by one slope per input dimension, natural space.
    Linear,
}

impl KernelSpec {
    pub fn iso(input_dim: usize) -> Self {
        Self {
            family: KernelFamily::SquaredExponentialIso,
            input_dim,
        }
    }

    pub fn ard(input_dim: usize) -> Self {
        Self {
            family: KernelFamily::SquaredExponentialArd,
            input_dim,
        }
    }

    pub fn n_lengthscales(&self) -> usize {
        match self.family {
            KernelFamily::SquaredExponentialIso => 1,
            KernelFamily::SquaredExponentialArd => self.input_dim,
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_lengthscales() + 1
    }

    /// Inverse squared length-scale per input dimension, and the signal
    /// variance, recovered from log-space parameters.
    pub(crate) fn unpack(&self, params: &[f64]) -> (Vec<f64>, f64) {
        let nl = self.n_lengthscales();
        let inv_ls2: Vec<f64> = match self.family {
            KernelFamily::SquaredExponentialIso => {
                vec![(-2.0 * params[0]).exp(); self.input_dim]
            }
            KernelFamily::SquaredExponentialArd => {
                params[..nl].iter().map(|l| (-2.0 * l).exp()).collect()
            }
        };
        (inv_ls2, params[nl].exp())
    }

    /// `K[i, j] = sf2 * exp(-0.5 * sum_k (a_ik - b_jk)^2 / l_k^2)`.
    pub fn matrix(&self, params: &[f64], a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension {
                context: "kernel parameters",
                expected: self.n_params(),
                actual: params.len(),
            });
        }
        for m in [a, b] {
            if m.ncols() != self.input_dim {
                return Err(Error::Dimension {
                    context: "kernel input columns",
                    expected: self.input_dim,
                    actual: m.ncols(),
                });
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("kernel parameters"));
        }
        let (inv_ls2, sf2) = self.unpack(params);
        Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
            let mut d2 = 0.0;
            for (k, w) in inv_ls2.iter().enumerate() {
                let d = a[(i, k)] - b[(j, k)];
                d2 += d * d * w;
            }
            sf2 * (-0.5 * d2).exp()
        }))
    }
}

impl MeanSpec {
    pub fn n_params(&self, input_dim: usize) -> usize {
        match self {
            MeanSpec::Zero => 0,
            MeanSpec::Constant => 1,
            MeanSpec::Linear => input_dim + 1,
        }
    }

    pub fn eval(&self, params: &[f64], x: &DMatrix<f64>) -> Vec<f64> {
        match self {
            MeanSpec::Zero => vec![0.0; x.nrows()],
            MeanSpec::Constant => vec![params[0]; x.nrows()],
            MeanSpec::Linear => (0..x.nrows())
                .map(|i| params[0] + (0..x.ncols()).map(|k| params[k + 1] * x[(i, k)]).sum::<f64>())
                .collect(),
        }
    }

    /// d m(x_i) / d params[j]
    pub(crate) fn jacobian(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let np = self.n_params(x.ncols());
        DMatrix::from_fn(x.nrows(), np, |i, j| match (self, j) {
            (MeanSpec::Linear, j) if j > 0 => x[(i, j - 1)],
            _ => 1.0,
        })
    }
}

/// Kernel plus mean; the noise variance is appended as the last coordinate.
///
/// Layout of a hyperparameter vector:
/// `[kernel (log) | mean (natural) | log noise variance]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kernel: KernelSpec,
    pub mean: MeanSpec,
}

impl ModelSpec {
    pub fn new(kernel: KernelSpec, mean: MeanSpec) -> Self {
        Self { kernel, mean }
    }

    pub fn input_dim(&self) -> usize {
        self.kernel.input_dim
    }

    pub fn n_params(&self) -> usize {
        self.kernel.n_params() + self.mean.n_params(self.input_dim()) + 1
    }

    pub fn kernel_range(&self) -> std::ops::Range<usize> {
        0..self.kernel.n_params()
    }

    pub fn mean_range(&self) -> std::ops::Range<usize> {
        let s = self.kernel.n_params();
        s..s + self.mean.n_params(self.input_dim())
    }

    pub fn noise_index(&self) -> usize {
        self.n_params() - 1
    }

    pub fn signal_index(&self) -> usize {
        self.kernel.n_lengthscales()
    }

    /// Whether coordinate `k` is stored as a logarithm.
    pub fn is_log_coordinate(&self, k: usize) -> bool {
        !self.mean_range().contains(&k)
    }

    pub fn coordinate_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_params());
        match self.kernel.family {
            KernelFamily::SquaredExponentialIso => names.push("log_lengthscale".to_string()),
            KernelFamily::SquaredExponentialArd => {
                names.extend((0..self.input_dim()).map(|k| format!("log_lengthscale_{k}")))
            }
        }
        names.push("log_signal_variance".into());
        match self.mean {
            MeanSpec::Zero => {}
            MeanSpec::Constant => names.push("mean_offset".into()),
            MeanSpec::Linear => {
                names.push("mean_intercept".into());
                names.extend((0..self.input_dim()).map(|k| format!("mean_slope_{k}")));
            }
        }
        names.push("log_noise_variance".into());
        names
    }
}

/// A point in unconstrained hyperparameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParams(pub Vec<f64>);

impl HyperParams {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        if self.len() != spec.n_params() {
            return Err(Error::Dimension {
                context: "hyperparameters",
                expected: spec.n_params(),
                actual: self.len(),
            });
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hyperparameters"));
        }
        Ok(())
    }

    /// Values with log coordinates exponentiated.
    pub fn natural(&self, spec: &ModelSpec) -> Vec<f64> {
        self.0
            .iter()
            .enumerate()
            .map(|(k, v)| if spec.is_log_coordinate(k) { v.exp() } else { *v })
            .collect()
    }

    /// Builds log-space parameters from length-scales, signal variance, mean
    /// parameters and noise variance given in natural units.
    pub fn from_natural(spec: &ModelSpec, lengthscales: &[f64], signal_var: f64, mean: &[f64], noise_var: f64) -> Result<Self> {
        if lengthscales.len() != spec.kernel.n_lengthscales() {
            return Err(Error::Dimension {
                context: "length-scales",
                expected: spec.kernel.n_lengthscales(),
                actual: lengthscales.len(),
            });
        }
        let mut v: Vec<f64> = lengthscales.iter().map(|l| l.ln()).collect();
        v.push(signal_var.ln());
        v.extend_from_slice(mean);
        v.push(noise_var.ln());
        let theta = HyperParams(v);
        theta.check(spec)?;
        Ok(theta)
    }

    pub fn kernel_params<'a>(&'a self, spec: &ModelSpec) -> &'a [f64] {
        &self.0[spec.kernel_range()]
    }

    pub fn mean_params<'a>(&'a self, spec: &ModelSpec) -> &'a [f64] {
        &self.0[spec.mean_range()]
    }

    pub fn noise_variance(&self, spec: &ModelSpec) -> f64 {
        self.0[spec.noise_index()].exp()
    }

    pub fn signal_variance(&self, spec: &ModelSpec) -> f64 {
        self.0[spec.signal_index()].exp()
    }
}

impl std::ops::Deref for HyperParams {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}
