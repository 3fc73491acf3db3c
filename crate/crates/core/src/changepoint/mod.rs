//! Online change-point detection by run-length message passing. Each
//! retained run length owns a segment model; with [`GpSegmentModel`] that is
//! a particle system over GP hyperparameters conditioned on the segment's
//! data, so predictions marginalize the hyperparameters per segment.

mod bocpd;
mod gp_segment;

pub use bocpd::{Bocpd, ConjugateGaussian, GaussianStats, Hazard, Pruning, RunLengthPosterior, RunLengthRow, SegmentModel};
pub use gp_segment::{GpSegment, GpSegmentModel};
