//! Subset-of-regressors approximation.
//!
//! With inducing rows `u` taken from the training set and
//! `A = noise * K_uu + K_uf K_fu`:
//!
//! mean = m(X*) + K_*u A^-1 K_uf (y - m(X))
//! var  = noise * K_*u A^-1 K_u* + noise
//!
//! Cost is O(n m^2) instead of O(n^3).

use nalgebra::{DMatrix, DVector};

use super::model::{cholesky_with_jitter, GpModel, PredictiveGaussian};
use super::spec::HyperParams;
use crate::error::{Error, Result};

impl GpModel {
    pub fn predict_sor(&self, theta: &HyperParams, inducing: &[usize], xstar: &DMatrix<f64>) -> Result<PredictiveGaussian> {
        theta.check(&self.spec)?;
        let n = self.data.len();
        if inducing.is_empty() {
            return Err(Error::InvalidArgument("subset of regressors needs at least one inducing point".into()));
        }
        if inducing.len() > n {
            return Err(Error::InvalidArgument(format!(
                "{} inducing points requested from {n} training points",
                inducing.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in inducing {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!("inducing index {i} is out of range or repeated")));
            }
            seen[i] = true;
        }
        if xstar.ncols() != self.spec.input_dim() {
            return Err(Error::Dimension {
                context: "query input dimension",
                expected: self.spec.input_dim(),
                actual: xstar.ncols(),
            });
        }

        let xu = self.data.x.select_rows(inducing);
        let noise = theta.noise_variance(&self.spec);
        let kuu = self.kernel(theta, &xu, &xu)?;
        let kuf = self.kernel(theta, &xu, &self.data.x)?;
        let ksu = self.kernel(theta, xstar, &xu)?;

        let mut a = &kuu * noise + &kuf * kuf.transpose();
        a = (&a + a.transpose()) * 0.5;
        let chol = cholesky_with_jitter(a)?;

        let m = self.mean(theta, &self.data.x);
        let r = DVector::from_fn(n, |i, _| self.data.y[i] - m[i]);
        let beta = chol.solve(&(&kuf * r));
        let adj = &ksu * beta;
        let mean = self.mean(theta, xstar).iter().zip(adj.iter()).map(|(a, b)| a + b).collect();

        let v = chol
            .l()
            .solve_lower_triangular(&ksu.transpose())
            .ok_or(Error::NonFinite("triangular solve"))?;
        let variance = (0..xstar.nrows())
            .map(|j| noise * v.column(j).norm_squared() + noise)
            .collect();
        Ok(PredictiveGaussian {
            mean,
            variance,
            covariance: None,
        })
    }
}
