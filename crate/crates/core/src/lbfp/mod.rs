//! Weighted multivariate histograms and the linear blend frequency polygon
//! (LBFP) built on them: evaluation, marginals, conditional CDF tables and
//! exact inversion sampling.

mod density;
mod format;
mod grid;
mod segment;

pub use density::{lbfp_eval, lbfp_sample, LbfpDensity, SampleScratch};
pub use format::{deserialize_grid, serialize_grid, MAGIC};
pub use grid::{build_histogram, HistogramGrid, OriginPolicy, MAX_CELLS, MAX_DIM, NORMALIZATION_TOL};
pub use segment::{invert_segment, BinSegment};

/// Free-function form of [`LbfpDensity::marginalize`].
pub fn marginalize(density: &LbfpDensity, prefix_len: usize) -> crate::Result<HistogramGrid> {
    density.marginalize(prefix_len)
}

/// Free-function form of [`LbfpDensity::conditional_cdf_table`].
pub fn conditional_cdf_table(density: &LbfpDensity, prefix: &[f64]) -> crate::Result<Vec<BinSegment>> {
    density.conditional_cdf_table(prefix)
}
