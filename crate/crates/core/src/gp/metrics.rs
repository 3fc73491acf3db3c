//! Standardized mean squared error and mean standardized log loss.

use super::model::{normal_logpdf, PredictiveGaussian};
use crate::error::{Error, Result};

/// Mean and population variance.
pub fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            context: "metric inputs",
            expected: a,
            actual: b,
        });
    }
    if a == 0 {
        return Err(Error::InvalidArgument("metric over zero points".into()));
    }
    Ok(())
}

pub fn smse(pred_mean: &[f64], y_true: &[f64], y_train: &[f64]) -> Result<f64> {
    check_lengths(pred_mean.len(), y_true.len())?;
    let (_, var) = moments(y_train);
    if y_train.is_empty() || var <= 0.0 {
        return Err(Error::InvalidArgument("training targets have zero variance".into()));
    }
    let mse = pred_mean.iter().zip(y_true).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y_true.len() as f64;
    Ok(mse / var)
}

/// MSLL from per-point predictive log densities of the test targets.
pub fn msll_from_log_density(log_density: &[f64], y_true: &[f64], y_train: &[f64]) -> Result<f64> {
    check_lengths(log_density.len(), y_true.len())?;
    let (m, var) = moments(y_train);
    if y_train.is_empty() || var <= 0.0 {
        return Err(Error::InvalidArgument("training targets have zero variance".into()));
    }
    let n = y_true.len() as f64;
    Ok(log_density
        .iter()
        .zip(y_true)
        .map(|(lp, t)| -lp + normal_logpdf(*t, m, var))
        .sum::<f64>()
        / n)
}

pub fn msll(pred: &PredictiveGaussian, y_true: &[f64], y_train: &[f64]) -> Result<f64> {
    let lp = pred.log_pdf(y_true)?;
    msll_from_log_density(&lp, y_true, y_train)
}
