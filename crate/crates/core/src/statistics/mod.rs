//! Monte-Carlo sampling of multi-shift transmittances and the estimators
//! built on them.

mod estimators;
mod montecarlo;
mod samples;

pub use estimators::{
    coherence_radius, coherence_radius_with_error, conditional_pdt, exceedance, marginal_pdt,
    moments, ChannelMoments, CoherenceRadius, Exceedance, Histogram, MomentsRow,
    DEFAULT_HISTOGRAM_BINS,
};
pub use montecarlo::{run_monte_carlo, MonteCarloConfig, MonteCarloRun, RunControl};
pub use samples::{SampleMeta, SampleRecord, SampleSet, SAMPLE_CSV_FORMAT};
