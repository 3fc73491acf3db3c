use nalgebra::DMatrix;

use crate::error::Result;
use crate::gp::{Dataset, GpModel, ModelSpec};
use crate::par::Execution;
use crate::prediction::{mixture_predict, PredictiveMixture};
use crate::priors::PriorSpec;
use crate::rng::{Purpose, Streams};
use crate::smc::{extend_with_observation, ParticleSystem, SmcConfig, TemperingSequence};

/// Segment data and the particle system conditioned on it. The system sits
/// at stage `len()`: one batch per observation.
#[derive(Debug, Clone)]
pub struct GpSegment {
    pub start: usize,
    pub sequence: TemperingSequence,
    pub system: ParticleSystem,
}

impl GpSegment {
    pub fn len(&self) -> usize {
        self.sequence.model().data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mixture predictive at scalar inputs given exactly this segment's data.
    pub fn predictive(&self, xs: &[f64], exec: Execution) -> Result<PredictiveMixture> {
        let xstar = DMatrix::from_column_slice(xs.len(), 1, xs);
        mixture_predict(&self.system.samples(), self.sequence.model(), &xstar, exec)
    }
}

/// Segment predictive that marginalizes GP hyperparameters with the sampler.
/// Each segment draws its own streams, keyed by its start time, so a segment
/// depends only on its own data and the seed.
#[derive(Debug, Clone)]
pub struct GpSegmentModel {
    pub spec: ModelSpec,
    pub prior: PriorSpec,
    pub smc: SmcConfig,
    streams: Streams,
}

impl GpSegmentModel {
    pub fn new(spec: ModelSpec, prior: PriorSpec, smc: SmcConfig) -> Result<Self> {
        smc.validate()?;
        prior.check_against(&spec)?;
        if spec.input_dim() != 1 {
            return Err(crate::Error::Config("change-point segments take a scalar input".into()));
        }
        let streams = Streams::new(smc.seed);
        Ok(Self { spec, prior, smc, streams })
    }

    /// Segment predictor over the given points, built observation by
    /// observation exactly as the detector does.
    pub fn fit(&self, start: usize, xs: &[f64], ys: &[f64]) -> Result<GpSegment> {
        let mut seg = crate::changepoint::SegmentModel::empty(self, start)?;
        for (x, y) in xs.iter().zip(ys) {
            crate::changepoint::SegmentModel::extend(self, &mut seg, *x, *y)?;
        }
        Ok(seg)
    }
}

impl crate::changepoint::SegmentModel for GpSegmentModel {
    type Segment = GpSegment;

    fn empty(&self, start: usize) -> Result<GpSegment> {
        let model = GpModel::new(self.spec, Dataset::empty(1))?;
        let sequence = TemperingSequence::new(model, self.prior.clone(), Vec::new())?;
        let streams = self.streams.derive(Purpose::Segment, start as u64);
        // Prior draws parallelize poorly at this size; the detector already
        // runs segments concurrently.
        let system = ParticleSystem::from_prior(&sequence, self.smc.particles, streams, Execution::Sequential)?;
        Ok(GpSegment { start, sequence, system })
    }

    fn log_predictive(&self, seg: &GpSegment, x: f64, y: f64) -> Result<f64> {
        Ok(seg.predictive(&[x], Execution::Sequential)?.log_pdf(&[y])?[0])
    }

    fn extend(&self, seg: &mut GpSegment, x: f64, y: f64) -> Result<()> {
        let cfg = SmcConfig {
            execution: Execution::Sequential,
            ..self.smc.clone()
        };
        extend_with_observation(&mut seg.system, &mut seg.sequence, &[x], y, &cfg)
    }
}
