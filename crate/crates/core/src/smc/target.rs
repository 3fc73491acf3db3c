use nalgebra::DVector;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::gp::{normal_logpdf, GpModel, HyperParams};
use crate::priors::PriorSpec;
use crate::rng::{Purpose, Streams};

/// A sequence of distributions `pi_0 = prior, ..., pi_P` over hyperparameters
/// where `pi_n` is the prior times a stage-`n` likelihood.
pub trait Tempered: Sync {
    fn dim(&self) -> usize;

    /// Number of stages after the prior (P).
    fn stages(&self) -> usize;

    fn log_prior(&self, theta: &HyperParams) -> Result<f64>;

    /// Log-likelihood term of `pi_n`, `1 <= n <= stages()`.
    fn log_likelihood(&self, stage: usize, theta: &HyperParams) -> Result<f64>;

    fn sample_prior(&self, rng: &mut crate::rng::StreamRng) -> HyperParams;

    /// Coordinates that never move (pinned by the prior).
    fn is_fixed(&self, _coord: usize) -> bool {
        false
    }
}

/// `log pi_n(theta)` together with the number of likelihood evaluations it
/// cost (0 at the prior stage or when the prior rules `theta` out).
pub fn log_pi<T: Tempered + ?Sized>(target: &T, stage: usize, theta: &HyperParams) -> Result<(f64, u64)> {
    if stage > target.stages() {
        return Err(Error::InvalidArgument(format!(
            "stage {stage} beyond the last stage {}",
            target.stages()
        )));
    }
    let lp = target.log_prior(theta)?;
    if stage == 0 || lp == f64::NEG_INFINITY {
        return Ok((lp, 0));
    }
    Ok((lp + target.log_likelihood(stage, theta)?, 1))
}

/// GP marginal likelihood tempered by data batches:
/// `pi_n(theta) ∝ p(y_{B_1..n} | x_{B_1..n}, theta) p(theta)`.
#[derive(Debug, Clone)]
pub struct TemperingSequence {
    model: GpModel,
    prior: PriorSpec,
    batches: Vec<Vec<usize>>,
    /// `prefix[n - 1]` holds the rows of batches `1..=n`, in batch order.
    prefix: Vec<GpModel>,
}

impl TemperingSequence {
    /// Explicit batches of row indices into `model.data`. Batches must be
    /// disjoint; they need not cover every row (later rows can be appended
    /// with [`push_batch`](Self::push_batch)).
    pub fn new(model: GpModel, prior: PriorSpec, batches: Vec<Vec<usize>>) -> Result<Self> {
        prior.check_against(&model.spec)?;
        let mut seq = Self {
            model,
            prior,
            batches: Vec::new(),
            prefix: Vec::new(),
        };
        for b in batches {
            seq.push_batch(b)?;
        }
        Ok(seq)
    }

    /// Cuts the data into `p` consecutive batches of `ceil(n / p)` rows (the
    /// trailing ones may be short or empty). With `shuffle`, rows are
    /// permuted first using the `Shuffle` stream.
    pub fn partition(model: GpModel, prior: PriorSpec, p: usize, shuffle: Option<&Streams>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("need at least one batch".into()));
        }
        let n = model.data.len();
        let mut order: Vec<usize> = (0..n).collect();
        if let Some(s) = shuffle {
            order.shuffle(&mut s.rng(Purpose::Shuffle, 0, 0));
        }
        let size = n.div_ceil(p).max(1);
        let batches = (0..p)
            .map(|b| order.iter().skip(b * size).take(size).copied().collect())
            .collect();
        Self::new(model, prior, batches)
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    /// Rows used by `pi_n`.
    pub fn prefix_model(&self, stage: usize) -> Option<&GpModel> {
        stage.checked_sub(1).and_then(|i| self.prefix.get(i))
    }

    /// Data rows covered by all batches so far.
    pub fn covered(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    /// Appends `B_{P+1}`, which must be disjoint from earlier batches.
    pub fn push_batch(&mut self, batch: Vec<usize>) -> Result<()> {
        let n = self.model.data.len();
        let mut used = vec![false; n];
        for &i in self.batches.iter().flatten() {
            used[i] = true;
        }
        for &i in &batch {
            if i >= n {
                return Err(Error::InvalidArgument(format!("batch index {i} out of range for {n} rows")));
            }
            if used[i] {
                return Err(Error::InvalidArgument(format!("row {i} appears in more than one batch")));
            }
            used[i] = true;
        }
        self.batches.push(batch);
        let rows: Vec<usize> = self.batches.iter().flatten().copied().collect();
        self.prefix.push(self.model.subset(&rows));
        Ok(())
    }

    /// Appends a new observation to the data and makes it the next batch.
    pub fn push_observation(&mut self, input: &[f64], output: f64) -> Result<()> {
        if input.len() != self.model.spec.input_dim() {
            return Err(Error::Dimension {
                context: "observation input",
                expected: self.model.spec.input_dim(),
                actual: input.len(),
            });
        }
        if !output.is_finite() || input.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        self.model.data.push(input, output);
        let idx = self.model.data.len() - 1;
        self.push_batch(vec![idx])
    }

    /// `log pi_n - log pi_{n-1}` computed directly as the conditional density
    /// of batch `n` given batches `1..n-1`, without forming either full
    /// likelihood.
    pub fn log_incremental_likelihood(&self, stage: usize, theta: &HyperParams) -> Result<f64> {
        if stage == 0 || stage > self.stages() {
            return Err(Error::InvalidArgument(format!("no increment for stage {stage}")));
        }
        let batch = &self.batches[stage - 1];
        if batch.is_empty() {
            return Ok(0.0);
        }
        let before = match self.prefix_model(stage - 1) {
            Some(m) => m.clone(),
            None => self.model.subset(&[]),
        };
        let new = self.model.data.select(batch);
        let pred = before.predict(theta, &new.x, true)?;
        let cov = pred.covariance.expect("covariance requested");
        if batch.len() == 1 {
            return Ok(normal_logpdf(new.y[0], pred.mean[0], cov[(0, 0)]));
        }
        let chol = crate::gp::cholesky_with_jitter(cov)?;
        let r = DVector::from_fn(batch.len(), |i, _| new.y[i] - pred.mean[i]);
        let alpha = chol.solve(&r);
        let half_logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        Ok(-0.5 * r.dot(&alpha) - half_logdet - 0.5 * batch.len() as f64 * (2.0 * std::f64::consts::PI).ln())
    }
}

impl Tempered for TemperingSequence {
    fn dim(&self) -> usize {
        self.model.n_params()
    }

    fn stages(&self) -> usize {
        self.batches.len()
    }

    fn log_prior(&self, theta: &HyperParams) -> Result<f64> {
        self.prior.log_prior(theta)
    }

    fn log_likelihood(&self, stage: usize, theta: &HyperParams) -> Result<f64> {
        let model = self
            .prefix_model(stage)
            .ok_or_else(|| Error::InvalidArgument(format!("no stage {stage}")))?;
        if model.data.is_empty() {
            theta.check(&model.spec)?;
            return Ok(0.0);
        }
        model.log_marginal_likelihood(theta)
    }

    fn sample_prior(&self, rng: &mut crate::rng::StreamRng) -> HyperParams {
        self.prior.sample_one(rng)
    }

    fn is_fixed(&self, coord: usize) -> bool {
        self.prior.coords[coord].is_fixed()
    }
}
