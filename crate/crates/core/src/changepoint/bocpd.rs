use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::smc::log_sum_exp;

/// Predictive model for the data inside one segment.
pub trait SegmentModel: Sync {
    type Segment: Clone + Send + Sync;

    /// A segment with no data yet, starting at time `start` (1-based).
    fn empty(&self, start: usize) -> Result<Self::Segment>;

    /// `log p(y | x, segment data)`.
    fn log_predictive(&self, segment: &Self::Segment, x: f64, y: f64) -> Result<f64>;

    /// Absorbs `(x, y)` into the segment.
    fn extend(&self, segment: &mut Self::Segment, x: f64, y: f64) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hazard(f64);

impl Hazard {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::Config(format!("hazard rate {rate} outside (0, 1)")));
        }
        Ok(Self(rate))
    }

    pub fn rate(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pruning {
    /// Run lengths whose posterior falls below this are dropped.
    pub threshold: f64,
    /// At most this many run lengths are kept (the most probable).
    pub max_run_lengths: usize,
}

impl Default for Pruning {
    fn default() -> Self {
        Self {
            threshold: 1e-6,
            max_run_lengths: 500,
        }
    }
}

impl Pruning {
    pub fn disabled() -> Self {
        Self {
            threshold: 0.0,
            max_run_lengths: usize::MAX,
        }
    }
}

/// Run-length distribution after observing `y_1..y_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLengthRow {
    pub t: usize,
    /// Retained run lengths, ascending.
    pub run_lengths: Vec<usize>,
    /// `log p(r_t, y_1..t)` before pruning.
    pub log_joint: Vec<f64>,
    /// `p(r_t | y_1..t)` over the retained run lengths.
    pub prob: Vec<f64>,
}

impl RunLengthRow {
    /// `p(r_t = 1 | y_1..t)`.
    pub fn change_probability(&self) -> f64 {
        match self.run_lengths.first() {
            Some(1) => self.prob[0],
            _ => 0.0,
        }
    }

    pub fn map_run_length(&self) -> usize {
        let best = self
            .prob
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        self.run_lengths[best]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLengthPosterior {
    pub rows: Vec<RunLengthRow>,
}

impl RunLengthPosterior {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dense `T x T` matrix with entry `(t-1, r-1) = p(r_t = r | y_1..t)`;
    /// pruned run lengths are zero.
    pub fn run_length_map(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; n];
                for (r, p) in row.run_lengths.iter().zip(&row.prob) {
                    dense[r - 1] = *p;
                }
                dense
            })
            .collect()
    }

    /// `p(r_t = 1 | y_1..t)` for every t.
    pub fn change_probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(RunLengthRow::change_probability).collect()
    }

    /// Times `t >= 2` (1-based) with `p(r_t = 1 | y_1..t) > threshold`.
    /// The first observation always starts a segment and is not reported.
    pub fn threshold_segments(&self, threshold: f64) -> Result<Vec<usize>> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("threshold {threshold} outside (0, 1)")));
        }
        Ok(self
            .rows
            .iter()
            .filter(|row| row.t >= 2 && row.change_probability() > threshold)
            .map(|row| row.t)
            .collect())
    }
}

struct Hypothesis<S> {
    start: usize,
    log_joint: f64,
    segment: S,
}

/// Online change-point detector over a univariate series.
///
/// At each step, every retained run length either grows, with weight
/// `(1 - hazard) * p(y_t | its segment)`, or all of them collapse into a
/// new segment, with weight `hazard * p(y_t | empty segment)`.
pub struct Bocpd<M: SegmentModel> {
    model: M,
    hazard: Hazard,
    pruning: Pruning,
    exec: Execution,
    t: usize,
    hypotheses: Vec<Hypothesis<M::Segment>>,
    posterior: RunLengthPosterior,
}

impl<M: SegmentModel> Bocpd<M> {
    pub fn new(model: M, hazard: Hazard, pruning: Pruning, exec: Execution) -> Self {
        Self {
            model,
            hazard,
            pruning,
            exec,
            t: 0,
            hypotheses: Vec::new(),
            posterior: RunLengthPosterior::default(),
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn posterior(&self) -> &RunLengthPosterior {
        &self.posterior
    }

    pub fn into_posterior(self) -> RunLengthPosterior {
        self.posterior
    }

    /// Segment data for the retained run lengths, shortest run first.
    pub fn segments(&self) -> Vec<(usize, &M::Segment)> {
        self.hypotheses.iter().map(|h| (self.t + 1 - h.start, &h.segment)).collect()
    }

    /// Segment for one run length, if retained.
    pub fn segment(&self, run_length: usize) -> Option<&M::Segment> {
        self.hypotheses
            .iter()
            .find(|h| self.t + 1 - h.start == run_length)
            .map(|h| &h.segment)
    }

    pub fn segment_mut(&mut self, run_length: usize) -> Option<&mut M::Segment> {
        let t = self.t;
        self.hypotheses
            .iter_mut()
            .find(|h| t + 1 - h.start == run_length)
            .map(|h| &mut h.segment)
    }

    /// Processes observation `y` at input `x` and returns the new row.
    pub fn step(&mut self, x: f64, y: f64) -> Result<&RunLengthRow> {
        let t = self.t + 1;
        let log_h = self.hazard.rate().ln();
        let log_1mh = (-self.hazard.rate()).ln_1p();

        let fresh = self.model.empty(t)?;
        let log_pred_fresh = self.model.log_predictive(&fresh, x, y)?;

        let model = &self.model;
        let hyps = &self.hypotheses;
        let preds = par::try_map_indexed(self.exec, hyps.len(), |i| model.log_predictive(&hyps[i].segment, x, y))?;

        let log_change = if t == 1 {
            log_pred_fresh
        } else {
            let prev: Vec<f64> = self.hypotheses.iter().map(|h| h.log_joint).collect();
            log_sum_exp(&prev) + log_h + log_pred_fresh
        };

        let old = std::mem::take(&mut self.hypotheses);
        let mut next: Vec<Hypothesis<M::Segment>> = Vec::with_capacity(old.len() + 1);
        next.push(Hypothesis {
            start: t,
            log_joint: log_change,
            segment: fresh,
        });
        for (h, lp) in old.into_iter().zip(preds) {
            next.push(Hypothesis {
                start: h.start,
                log_joint: h.log_joint + log_1mh + lp,
                segment: h.segment,
            });
        }

        let log_joint: Vec<f64> = next.iter().map(|h| h.log_joint).collect();
        let log_evidence = log_sum_exp(&log_joint);
        if !log_evidence.is_finite() {
            let max_log_joint = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::MessageUnderflow { t, max_log_joint });
        }
        let prob: Vec<f64> = log_joint.iter().map(|l| (l - log_evidence).exp()).collect();

        // Prune: drop improbable run lengths, then keep the most probable.
        let best = prob.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
        let mut keep: Vec<usize> = (0..next.len())
            .filter(|&i| i == best || prob[i] >= self.pruning.threshold)
            .collect();
        if keep.len() > self.pruning.max_run_lengths {
            keep.sort_by(|a, b| prob[*b].total_cmp(&prob[*a]).then(a.cmp(b)));
            keep.truncate(self.pruning.max_run_lengths.max(1));
            keep.sort_unstable();
        }
        let mut slots: Vec<Option<Hypothesis<M::Segment>>> = next.into_iter().map(Some).collect();
        let retained: Vec<Hypothesis<M::Segment>> = keep.iter().map(|&i| slots[i].take().expect("unique index")).collect();
        let kept_prob: Vec<f64> = keep.iter().map(|&i| prob[i]).collect();
        let kept_total: f64 = kept_prob.iter().sum();

        // Absorb y_t into every surviving segment.
        let model = &self.model;
        self.hypotheses = par::try_map_owned(self.exec, retained, |mut h| {
            model.extend(&mut h.segment, x, y)?;
            Ok::<_, Error>(h)
        })?;
        self.t = t;

        self.posterior.rows.push(RunLengthRow {
            t,
            run_lengths: self.hypotheses.iter().map(|h| t + 1 - h.start).collect(),
            log_joint: self.hypotheses.iter().map(|h| h.log_joint).collect(),
            prob: kept_prob.iter().map(|p| p / kept_total).collect(),
        });
        Ok(self.posterior.rows.last().expect("just pushed"))
    }

    /// Feeds a whole series.
    pub fn run(&mut self, xs: &[f64], ys: &[f64]) -> Result<()> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension {
                context: "series",
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        for (x, y) in xs.iter().zip(ys) {
            self.step(*x, *y)?;
        }
        Ok(())
    }
}

/// Gaussian observations with known variance and a Gaussian prior on the
/// segment mean. The predictive is available in closed form, which makes it
/// a reference model for checking the message passing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateGaussian {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub noise_var: f64,
}

/// Count and sum of the observations in a segment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussianStats {
    pub n: usize,
    pub sum: f64,
}

impl ConjugateGaussian {
    pub fn posterior_mean_var(&self, stats: &GaussianStats) -> (f64, f64) {
        let precision = 1.0 / self.prior_var + stats.n as f64 / self.noise_var;
        let var = 1.0 / precision;
        (var * (self.prior_mean / self.prior_var + stats.sum / self.noise_var), var)
    }

    /// Log marginal likelihood of a whole segment, by chaining predictives.
    pub fn log_evidence(&self, ys: &[f64]) -> f64 {
        let mut stats = GaussianStats::default();
        let mut total = 0.0;
        for y in ys {
            let (m, v) = self.posterior_mean_var(&stats);
            total += crate::gp::normal_logpdf(*y, m, v + self.noise_var);
            stats.n += 1;
            stats.sum += y;
        }
        total
    }
}

impl SegmentModel for ConjugateGaussian {
    type Segment = GaussianStats;

    fn empty(&self, _start: usize) -> Result<GaussianStats> {
        Ok(GaussianStats::default())
    }

    fn log_predictive(&self, s: &GaussianStats, _x: f64, y: f64) -> Result<f64> {
        let (m, v) = self.posterior_mean_var(s);
        Ok(crate::gp::normal_logpdf(y, m, v + self.noise_var))
    }

    fn extend(&self, s: &mut GaussianStats, _x: f64, y: f64) -> Result<()> {
        s.n += 1;
        s.sum += y;
        Ok(())
    }
}
