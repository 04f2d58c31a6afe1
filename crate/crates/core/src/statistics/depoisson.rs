use serde::{Deserialize, Serialize};

use super::unit_reference_cost;
use crate::error::{invalid, Result};
use crate::estimate::{mean_stderr, try_run_replicates, EstimateLabel, EstimateRecord};
use crate::point_process::{grid_measure, poisson_count, sample_uniform, BoxRegion, RngStream};
use crate::subadditivity::{f_ref_sample, grid_resolution};

/// One paired replicate of [`depoissonize_compare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepoissonReplicate {
    /// `N_L`, the Poisson count on `Q_L`.
    pub count: usize,
    /// `(1/|Q_L|) W^p(μ, κ·grid)` on `Q_L`.
    pub poisson_value: f64,
    /// `n^{p/d} W^p(n⁻¹ Σ_{i≤n} δ_{X_i}, grid)` on the unit cube.
    pub fixed_value: f64,
    /// `L^p W^p(N⁻¹ Σ_{i≤N} δ_{X_i}, grid)` on the unit cube, solved separately.
    pub conditional_value: f64,
    /// `(L^d/N) · poisson_value`, which must equal `conditional_value`.
    pub reconstruction: f64,
}

impl DepoissonReplicate {
    pub fn identity_error(&self) -> f64 {
        let diff = (self.conditional_value - self.reconstruction).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.conditional_value.abs().max(self.reconstruction.abs())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepoissonRecord {
    #[serde(rename = "L")]
    pub l: f64,
    /// `round(L^d)`.
    pub n_fixed: usize,
    pub poisson_estimate: EstimateRecord,
    pub fixed_estimate: EstimateRecord,
    /// `|poisson mean − fixed mean|`.
    pub gap: f64,
    /// Standard error of the paired replicate differences.
    pub joint_stderr: f64,
    /// Largest relative error of the conditional identity over replicates with `N ≥ 1`.
    pub identity_max_error: f64,
    pub samples: Vec<DepoissonReplicate>,
}

/// Poissonized reference cost on `Q_L` against the fixed-`n` unit-cube cost
/// at `n = round(L^d)`, both against the same grid of `round(L·g)` cells per
/// axis (in the unit cube after dilation by `1/L`).
///
/// Replicate `r` draws one sequence `X_1, X_2, …` of uniform points in
/// `[0,1)^d` and `N ~ Poisson(L^d)`; the Poisson arm uses `L·X_1, …, L·X_N`
/// and the fixed arm `X_1, …, X_n`, so the arms share their first
/// `min(N, n)` points.
pub fn depoissonize_compare(
    l: f64,
    d: usize,
    p: f64,
    replicates: usize,
    grid_per_unit: usize,
    stream: RngStream,
) -> Result<DepoissonRecord> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    if !(l.is_finite() && l > 0.0) {
        return invalid(format!("L must be positive, got {l}"));
    }
    if replicates < 2 {
        return invalid(format!("need at least 2 replicates, got {replicates}"));
    }
    if grid_per_unit == 0 {
        return invalid("grid_per_unit must be positive");
    }
    let volume = l.powi(d as i32);
    let n = volume.round();
    if n < 2.0 {
        return invalid(format!("round(L^d) = {n} is below 2"));
    }
    let n = n as usize;
    let res = grid_resolution(l, grid_per_unit);
    let unit = BoxRegion::cube(d, 1.0)?;
    let cube = BoxRegion::cube(d, l)?;
    let grid = grid_measure(&unit, &vec![res; d], 1.0)?;
    let lp = l.powf(p);

    let samples = try_run_replicates(replicates, |r| {
        let s = stream.replicate(r);
        let count = poisson_count(volume, &mut s.child(0).rng()) as usize;
        let points = sample_uniform(count.max(n), &unit, s.child(1));
        let fixed_value =
            (n as f64).powf(p / d as f64) * unit_reference_cost(&points, n, &grid, p)?;
        if count == 0 {
            return Ok(DepoissonReplicate {
                count,
                poisson_value: 0.0,
                fixed_value,
                conditional_value: 0.0,
                reconstruction: 0.0,
            });
        }
        let mu = points.truncated(count).to_measure().dilated(l);
        let poisson_value = f_ref_sample(&mu, &cube, grid_per_unit, p)?;
        let conditional_value = lp * unit_reference_cost(&points, count, &grid, p)?;
        Ok(DepoissonReplicate {
            count,
            poisson_value,
            fixed_value,
            conditional_value,
            reconstruction: volume / count as f64 * poisson_value,
        })
    })?;

    let seed = stream.master_seed;
    let pois: Vec<f64> = samples.iter().map(|s| s.poisson_value).collect();
    let fixed: Vec<f64> = samples.iter().map(|s| s.fixed_value).collect();
    let diffs: Vec<f64> = samples
        .iter()
        .map(|s| s.poisson_value - s.fixed_value)
        .collect();
    let poisson_estimate =
        EstimateRecord::from_samples(EstimateLabel::FRef, l, p, d, &pois, seed, Some(res))?;
    let fixed_estimate =
        EstimateRecord::from_samples(EstimateLabel::FRef, n as f64, p, d, &fixed, seed, Some(res))?;
    let (diff_mean, joint_stderr) = mean_stderr(&diffs)?;
    let identity_max_error = samples
        .iter()
        .filter(|s| s.count > 0)
        .map(DepoissonReplicate::identity_error)
        .fold(0.0, f64::max);
    Ok(DepoissonRecord {
        l,
        n_fixed: n,
        poisson_estimate,
        fixed_estimate,
        gap: diff_mean.abs(),
        joint_stderr,
        identity_max_error,
        samples,
    })
}
