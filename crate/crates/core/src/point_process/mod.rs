//! Boxes, partitions, atomic measures and seeded Poisson/uniform sampling.

mod measure;
mod partition;
mod region;
mod rng;
mod sampling;

pub use measure::{PointCloud, WeightedMeasure};
pub use partition::Partition;
pub use region::BoxRegion;
pub use rng::RngStream;
pub use sampling::{grid_measure, poisson_count, sample_poisson_pp, sample_uniform};

/// Atoms of `measure` inside `region` (closed lower faces, open upper faces).
pub fn restrict(measure: &WeightedMeasure, region: &BoxRegion) -> WeightedMeasure {
    measure.restrict(region)
}
