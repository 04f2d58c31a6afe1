//! Monte Carlo summaries and the replicate runner shared by the experiment
//! modules.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateLabel {
    FRef,
    FBi,
    Defect,
    Rate,
}

/// Mean and standard error of a normalized cost over independent replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub label: EstimateLabel,
    /// Side length `L` or point count `n`.
    pub scale: f64,
    pub p: f64,
    pub d: usize,
    pub mean: f64,
    /// Sample standard deviation over `√replicates`.
    pub stderr: f64,
    pub replicates: usize,
    pub seed: u64,
    pub grid_resolution: Option<usize>,
}

impl EstimateRecord {
    pub fn from_samples(
        label: EstimateLabel,
        scale: f64,
        p: f64,
        d: usize,
        samples: &[f64],
        seed: u64,
        grid_resolution: Option<usize>,
    ) -> Result<Self> {
        let (mean, stderr) = mean_stderr(samples)?;
        Ok(Self {
            label,
            scale,
            p,
            d,
            mean,
            stderr,
            replicates: samples.len(),
            seed,
            grid_resolution,
        })
    }

    /// `|a − b| / √(se_a² + se_b²)`, infinite when both errors vanish and the means differ.
    pub fn z_distance(&self, other: &Self) -> f64 {
        let diff = (self.mean - other.mean).abs();
        let se = self.stderr.hypot(other.stderr);
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Sample mean and `sd / √n`; needs at least two samples.
pub fn mean_stderr(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return invalid(format!("an estimate needs at least 2 replicates, got {n}"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return invalid("non-finite replicate value");
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, (var / n as f64).sqrt()))
}

/// Runs `f(0), …, f(count − 1)` on the rayon pool and returns the results in
/// index order, so aggregates do not depend on scheduling.
pub fn run_replicates<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// As [`run_replicates`] for fallible replicates; the first error in index
/// order is returned.
pub fn try_run_replicates<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    run_replicates(count, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_two_points() {
        let (m, se) = mean_stderr(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        // sd = √2, se = √2/√2
        assert!((se - 1.0).abs() < 1e-15);
        assert!(mean_stderr(&[1.0]).is_err());
    }

    #[test]
    fn runner_keeps_order() {
        let v = run_replicates(50, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == (i * i) as u64));
    }
}
