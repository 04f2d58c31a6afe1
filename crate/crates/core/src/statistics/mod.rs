//! Poisson tail and moment checks, de-Poissonization and fixed-`n` studies
//! on the unit cube, and rate fits.

mod depoisson;
mod fixed_n;
mod rates;
mod tails;

pub use depoisson::{depoissonize_compare, DepoissonRecord, DepoissonReplicate};
pub use fixed_n::{
    bipartite_fixed_n, concentration_check, monotonicity_check, ConcentrationLevel,
    ConcentrationReport, Histogram, MonotonicityReport, PairedDifference, HISTOGRAM_BINS,
};
pub use rates::{expected_slope, rate_fit, RateFit};
pub use tails::{
    default_thresholds, moment_boundedness, moment_ratio, poisson_tail_bound, tail_check,
    MomentReport, TailReport,
};

use crate::error::Result;
use crate::point_process::{PointCloud, WeightedMeasure};
use crate::transport::transport_cost;

/// `W^p(k⁻¹ Σ_{i≤k} δ_{X_i}, grid)` for the first `k` points of `points`,
/// with `grid` a probability measure.
pub(crate) fn unit_reference_cost(
    points: &PointCloud,
    k: usize,
    grid: &WeightedMeasure,
    p: f64,
) -> Result<f64> {
    let mu = WeightedMeasure::uniform_weights(
        points.dim(),
        points.truncated(k).coords().to_vec(),
        1.0 / k as f64,
    )?;
    Ok(transport_cost(&mu, grid, p)?.cost)
}
