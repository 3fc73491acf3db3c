//! Coordinatewise-independent hyperparameter priors.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{HyperParams, ModelSpec};
use crate::rng::{Purpose, Streams};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Prior over a single coordinate, evaluated in that coordinate's storage
/// space (log for positive parameters, natural for mean parameters).
///
/// `Fixed` pins a coordinate: it is excluded from sampling moves, grids and
/// optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawPrior")]
pub enum Prior {
    GaussianOnLog { mean: f64, std: f64 },
    GaussianOnNatural { mean: f64, std: f64 },
    UniformOnLog { lo: f64, hi: f64 },
    Fixed { value: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawPrior {
    GaussianOnLog {
        mean: f64,
        std: Option<f64>,
        variance: Option<f64>,
    },
    GaussianOnNatural {
        mean: f64,
        std: Option<f64>,
        variance: Option<f64>,
    },
    UniformOnLog {
        lo: f64,
        hi: f64,
    },
    Fixed {
        value: f64,
    },
}

fn resolve_std(std: Option<f64>, variance: Option<f64>) -> std::result::Result<f64, String> {
    match (std, variance) {
        (Some(s), None) => Ok(s),
        (None, Some(v)) if v > 0.0 => Ok(v.sqrt()),
        (None, Some(v)) => Err(format!("prior variance must be positive, got {v}")),
        _ => Err("gaussian prior needs exactly one of `std` or `variance`".into()),
    }
}

impl TryFrom<RawPrior> for Prior {
    type Error = String;

    fn try_from(raw: RawPrior) -> std::result::Result<Self, String> {
        let p = match raw {
            RawPrior::GaussianOnLog { mean, std, variance } => Prior::GaussianOnLog {
                mean,
                std: resolve_std(std, variance)?,
            },
            RawPrior::GaussianOnNatural { mean, std, variance } => Prior::GaussianOnNatural {
                mean,
                std: resolve_std(std, variance)?,
            },
            RawPrior::UniformOnLog { lo, hi } => Prior::UniformOnLog { lo, hi },
            RawPrior::Fixed { value } => Prior::Fixed { value },
        };
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    }
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Prior::GaussianOnLog { mean, std } | Prior::GaussianOnNatural { mean, std } => {
                if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
                    return Err(Error::Config(format!("gaussian prior needs finite mean and std > 0, got ({mean}, {std})")));
                }
            }
            Prior::UniformOnLog { lo, hi } => {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Config(format!("uniform prior needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            Prior::Fixed { value } => {
                if !value.is_finite() {
                    return Err(Error::Config("fixed prior value must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn log_density(&self, v: f64) -> f64 {
        match *self {
            Prior::GaussianOnLog { mean, std } | Prior::GaussianOnNatural { mean, std } => {
                let z = (v - mean) / std;
                -0.5 * z * z - std.ln() - LN_SQRT_2PI
            }
            Prior::UniformOnLog { lo, hi } => {
                if (lo..=hi).contains(&v) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::Fixed { value } => {
                if v == value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Prior::GaussianOnLog { mean, std } | Prior::GaussianOnNatural { mean, std } => {
                Normal::new(mean, std).expect("validated std").sample(rng)
            }
            Prior::UniformOnLog { lo, hi } => rng.random_range(lo..hi),
            Prior::Fixed { value } => value,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Prior::Fixed { .. })
    }

    fn is_log_space(&self) -> Option<bool> {
        match self {
            Prior::GaussianOnLog { .. } | Prior::UniformOnLog { .. } => Some(true),
            Prior::GaussianOnNatural { .. } => Some(false),
            Prior::Fixed { .. } => None,
        }
    }
}

/// One prior per hyperparameter coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorSpec {
    pub coords: Vec<Prior>,
}

impl PriorSpec {
    pub fn new(coords: Vec<Prior>) -> Result<Self> {
        for p in &coords {
            p.validate()?;
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Indices of coordinates that are not pinned.
    pub fn free_coordinates(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| !self.coords[k].is_fixed()).collect()
    }

    /// Checks that the prior matches a model layout: same dimension, log-space
    /// priors on log coordinates, natural-space priors on mean coordinates.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<()> {
        if self.dim() != spec.n_params() {
            return Err(Error::Config(format!(
                "prior has {} coordinates but the model has {} hyperparameters",
                self.dim(),
                spec.n_params()
            )));
        }
        let names = spec.coordinate_names();
        for (k, p) in self.coords.iter().enumerate() {
            if let Some(log) = p.is_log_space() {
                if log != spec.is_log_coordinate(k) {
                    return Err(Error::Config(format!(
                        "prior for `{}` is declared in {} space",
                        names[k],
                        if log { "log" } else { "natural" }
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn log_prior(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension {
                context: "prior",
                expected: self.dim(),
                actual: theta.len(),
            });
        }
        let mut total = 0.0;
        for (p, v) in self.coords.iter().zip(theta) {
            total += p.log_density(*v);
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        Ok(total)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> HyperParams {
        HyperParams(self.coords.iter().map(|p| p.sample(rng)).collect())
    }

    /// Draw `i` uses the stream `(Init, 0, i)`, so draws are reproducible
    /// individually and independent of `n`.
    pub fn sample_prior(&self, n: usize, streams: &Streams) -> Vec<HyperParams> {
        (0..n)
            .map(|i| self.sample_one(&mut streams.rng(Purpose::Init, 0, i as u64)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{KernelSpec, MeanSpec};
    use approx::assert_relative_eq;

    #[test]
    fn standard_normal_mode() {
        let spec = PriorSpec::new(vec![Prior::GaussianOnLog { mean: 0.0, std: 1.0 }; 3]).unwrap();
        let lp = spec.log_prior(&[0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(lp, 3.0 * -0.5 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-14);
    }

    #[test]
    fn uniform_out_of_support() {
        let spec = PriorSpec::new(vec![Prior::UniformOnLog { lo: -1.0, hi: 1.0 }]).unwrap();
        assert_eq!(spec.log_prior(&[2.0]).unwrap(), f64::NEG_INFINITY);
        assert_relative_eq!(spec.log_prior(&[0.5]).unwrap(), -(2.0f64).ln());
    }

    #[test]
    fn sarcos_style_prior_values() {
        // Variance 3 on log length-scales and log signal variance, variance 1
        // on log noise.
        let json = r#"[
            {"kind": "gaussian_on_log", "mean": 3.0, "variance": 3.0},
            {"kind": "gaussian_on_log", "mean": 1.0, "std": 1.0}
        ]"#;
        let spec: PriorSpec = serde_json::from_str(json).unwrap();
        let lp = spec.log_prior(&[4.0, 0.0]).unwrap();
        let want = (-0.5 / 3.0 - 0.5 * (2.0 * std::f64::consts::PI * 3.0).ln())
            + (-0.5 - 0.5 * (2.0 * std::f64::consts::PI).ln());
        assert_relative_eq!(lp, want, epsilon = 1e-14);
    }

    #[test]
    fn config_rejects_bad_parameters() {
        assert!(serde_json::from_str::<Prior>(r#"{"kind":"gaussian_on_log","mean":0,"std":0}"#).is_err());
        assert!(serde_json::from_str::<Prior>(r#"{"kind":"uniform_on_log","lo":1,"hi":0}"#).is_err());
        assert!(serde_json::from_str::<Prior>(r#"{"kind":"gaussian_on_log","mean":0,"std":1,"variance":1}"#).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let spec = PriorSpec::new(vec![Prior::GaussianOnLog { mean: 0.0, std: 1.0 }]).unwrap();
        assert!(spec.log_prior(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn layout_check() {
        let model = ModelSpec::new(KernelSpec::iso(1), MeanSpec::Constant);
        let g = Prior::GaussianOnLog { mean: 0.0, std: 1.0 };
        let n = Prior::GaussianOnNatural { mean: 0.0, std: 1.0 };
        assert!(PriorSpec::new(vec![g, g, n, g]).unwrap().check_against(&model).is_ok());
        assert!(PriorSpec::new(vec![g, g, g, g]).unwrap().check_against(&model).is_err());
        assert!(PriorSpec::new(vec![g, g, n]).unwrap().check_against(&model).is_err());
        let f = Prior::Fixed { value: 0.0 };
        assert!(PriorSpec::new(vec![f, g, f, g]).unwrap().check_against(&model).is_ok());
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let spec = PriorSpec::new(vec![Prior::UniformOnLog { lo: -1.0, hi: 1.0 }, Prior::Fixed { value: 2.0 }]).unwrap();
        let a = spec.sample_prior(1, &Streams::new(9));
        let b = spec.sample_prior(1, &Streams::new(9));
        assert_eq!(a, b);
        let many = spec.sample_prior(10_000, &Streams::new(1));
        assert!(many.iter().all(|t| (-1.0..=1.0).contains(&t[0]) && t[1] == 2.0));
    }

    #[test]
    fn gaussian_sample_mean_within_clt_band() {
        let spec = PriorSpec::new(vec![Prior::GaussianOnLog { mean: 3.0, std: 3f64.sqrt() }]).unwrap();
        let draws = spec.sample_prior(10_000, &Streams::new(2024));
        let mean = draws.iter().map(|t| t[0]).sum::<f64>() / 1e4;
        assert!((mean - 3.0).abs() < 0.06, "{mean}");
    }

    #[test]
    fn densities_integrate_to_one() {
        let priors = [
            Prior::GaussianOnLog { mean: 3.0, std: 3f64.sqrt() },
            Prior::GaussianOnNatural { mean: -1.0, std: 0.2 },
            Prior::UniformOnLog { lo: -1.0, hi: 1.0 },
        ];
        for p in priors {
            // Composite Simpson on [-40, 40]; the uniform's endpoints sit on nodes.
            let (a, b, n) = (-40.0, 40.0, 800_000usize);
            let h = (b - a) / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * p.log_density(a + i as f64 * h).exp();
            }
            let integral = s * h / 3.0;
            let tol = if matches!(p, Prior::UniformOnLog { .. }) { 1e-4 } else { 1e-6 };
            assert!((integral - 1.0).abs() < tol, "{p:?}: {integral}");
        }
    }

    #[test]
    fn sample_histogram_matches_density() {
        // Chi-square goodness of fit over 20 bins, n = 1e5, alpha = 0.001.
        let p = Prior::GaussianOnLog { mean: 3.0, std: 1.5 };
        let spec = PriorSpec::new(vec![p]).unwrap();
        let n = 100_000;
        let draws = spec.sample_prior(n, &Streams::new(77));
        let edges: Vec<f64> = (0..=18).map(|i| 3.0 - 4.5 + i as f64 * 0.5).collect();
        let cdf = |x: f64| {
            // Trapezoidal integration of the density from far left.
            let (a, m) = (-20.0, 20_000);
            let h = (x - a) / m as f64;
            let mut s = 0.5 * (p.log_density(a).exp() + p.log_density(x).exp());
            for i in 1..m {
                s += p.log_density(a + i as f64 * h).exp();
            }
            s * h
        };
        let mut probs = vec![cdf(edges[0])];
        for w in edges.windows(2) {
            probs.push(cdf(w[1]) - cdf(w[0]));
        }
        probs.push(1.0 - cdf(*edges.last().unwrap()));
        let mut counts = vec![0usize; probs.len()];
        for t in &draws {
            let bin = edges.iter().take_while(|e| t[0] >= **e).count();
            counts[bin] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(c, p)| {
                let e = p * n as f64;
                (*c as f64 - e).powi(2) / e
            })
            .sum();
        // 0.999 quantile of chi-square with 19 degrees of freedom.
        assert!(chi2 < 43.82, "chi2 = {chi2}");
    }
}
