use serde::{Deserialize, Serialize};

use super::unit_reference_cost;
use crate::error::{invalid, Error, Result};
use crate::estimate::{mean_stderr, try_run_replicates, EstimateLabel, EstimateRecord};
use crate::point_process::{grid_measure, sample_uniform, BoxRegion, RngStream};
use crate::transport::assignment_cost;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub from_n: usize,
    pub to_n: usize,
    /// Mean of `f(1|to_n) − f(1|from_n)` over replicates.
    pub mean: f64,
    pub stderr: f64,
}

impl PairedDifference {
    /// Not above zero by more than `3·stderr`.
    pub fn non_increasing(&self) -> bool {
        self.mean <= 3.0 * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub grid_resolution: usize,
    pub estimates: Vec<EstimateRecord>,
    pub differences: Vec<PairedDifference>,
    pub holds: bool,
}

/// Estimates `f(1|n) = E[W^p(n⁻¹ Σ δ_{X_i}, ·)]` on `[0,1]^d` for each `n`,
/// the uniform measure represented by the grid of `grid_resolution` cells
/// per axis. Replicate `r` draws `max(n_list)` points once and every `n`
/// uses the first `n` of them, so consecutive estimates are compared
/// through paired differences.
pub fn monotonicity_check(
    n_list: &[usize],
    d: usize,
    p: f64,
    replicates: usize,
    grid_resolution: usize,
    stream: RngStream,
) -> Result<MonotonicityReport> {
    if n_list.len() < 2 {
        return invalid("monotonicity needs at least two values of n");
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] < w[0]) {
        return invalid("n_list must be positive and non-decreasing");
    }
    check_common(d, p, replicates)?;
    if grid_resolution == 0 {
        return invalid("grid resolution must be positive");
    }
    let unit = BoxRegion::cube(d, 1.0)?;
    let grid = grid_measure(&unit, &vec![grid_resolution; d], 1.0)?;
    let n_max = *n_list.last().unwrap_or(&0);
    let rows = try_run_replicates(replicates, |r| {
        let points = sample_uniform(n_max, &unit, stream.replicate(r));
        n_list
            .iter()
            .map(|&n| unit_reference_cost(&points, n, &grid, p))
            .collect::<Result<Vec<f64>>>()
    })?;
    let column = |k: usize| rows.iter().map(|row| row[k]).collect::<Vec<f64>>();
    let estimates = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            EstimateRecord::from_samples(
                EstimateLabel::FRef,
                n as f64,
                p,
                d,
                &column(k),
                stream.master_seed,
                Some(grid_resolution),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let differences = (1..n_list.len())
        .map(|k| {
            let diffs: Vec<f64> = rows.iter().map(|row| row[k] - row[k - 1]).collect();
            let (mean, stderr) = mean_stderr(&diffs)?;
            Ok(PairedDifference {
                from_n: n_list[k - 1],
                to_n: n_list[k],
                mean,
                stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotonicityReport {
        grid_resolution,
        estimates,
        holds: differences.iter().all(PairedDifference::non_increasing),
        differences,
    })
}

/// `E[(1/n) W^p(Σδ_{X_i}, Σδ_{Y_i})]` over `n` i.i.d. uniform pairs in
/// `[0,1]^d`, i.e. the mean per-point cost of the optimal matching.
/// Replicate `r` uses `stream.replicate(r)` with children 0 and 1 for the two
/// clouds.
pub fn bipartite_fixed_n(
    n: usize,
    d: usize,
    p: f64,
    replicates: usize,
    stream: RngStream,
) -> Result<EstimateRecord> {
    check_common(d, p, replicates)?;
    if n == 0 {
        return invalid("n must be positive");
    }
    let unit = BoxRegion::cube(d, 1.0)?;
    let samples = try_run_replicates(replicates, |r| {
        let s = stream.replicate(r);
        let x = sample_uniform(n, &unit, s.child(0));
        let y = sample_uniform(n, &unit, s.child(1));
        Ok(assignment_cost(&x, &y, p)?.cost / n as f64)
    })?;
    EstimateRecord::from_samples(
        EstimateLabel::Rate,
        n as f64,
        p,
        d,
        &samples,
        stream.master_seed,
        None,
    )
}

/// Equal-width histogram of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
        Self { edges, counts }
    }
}

pub const HISTOGRAM_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationLevel {
    pub n: usize,
    pub replicates: usize,
    /// Sample mean of `Z_n = n^{1/d} W_p`.
    pub mean_z: f64,
    /// Sample mean of `|Z_n − mean_z|^p`.
    pub dispersion: f64,
    pub dispersion_stderr: f64,
    /// Histogram of `Z_n − mean_z`.
    pub deviations: Histogram,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub d: usize,
    pub p: f64,
    /// `p/d − min(p/2, 1)`.
    pub exponent: f64,
    /// Four times `dispersion · n^{−exponent}` at the smallest `n`.
    pub constant: f64,
    /// Least-squares slope of `log dispersion` against `log n`, when at
    /// least two levels have positive dispersion.
    pub fitted_exponent: Option<f64>,
    pub levels: Vec<ConcentrationLevel>,
    /// Every level satisfies `dispersion − 3·stderr ≤ constant · n^{exponent}`.
    pub holds: bool,
}

/// Fluctuations of `Z_n = n^{1/d} W_p(n⁻¹Σδ_{X_i}, n⁻¹Σδ_{Y_i})` for i.i.d.
/// uniform points in `[0,1]^d`. Only `1 ≤ p < d` is covered.
pub fn concentration_check(
    n_list: &[usize],
    d: usize,
    p: f64,
    replicates: usize,
    stream: RngStream,
) -> Result<ConcentrationReport> {
    check_common(d, p, replicates)?;
    if p >= d as f64 {
        return Err(Error::RegimeNotCovered(format!(
            "concentration needs p < d, got p = {p}, d = {d}"
        )));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return invalid("n_list must be a nonempty list of positive counts");
    }
    let unit = BoxRegion::cube(d, 1.0)?;
    let exponent = p / d as f64 - (p / 2.0).min(1.0);
    let mut levels = Vec::with_capacity(n_list.len());
    for (k, &n) in n_list.iter().enumerate() {
        let level_stream = stream.child(k as u64);
        let z = try_run_replicates(replicates, |r| {
            let s = level_stream.replicate(r);
            let x = sample_uniform(n, &unit, s.child(0));
            let y = sample_uniform(n, &unit, s.child(1));
            let wp = assignment_cost(&x, &y, p)?.cost / n as f64;
            Ok((n as f64).powf(1.0 / d as f64) * wp.powf(1.0 / p))
        })?;
        let mean_z = z.iter().sum::<f64>() / z.len() as f64;
        let dev: Vec<f64> = z.iter().map(|v| v - mean_z).collect();
        let powers: Vec<f64> = dev.iter().map(|v| v.abs().powf(p)).collect();
        let (dispersion, dispersion_stderr) = mean_stderr(&powers)?;
        levels.push(ConcentrationLevel {
            n,
            replicates,
            mean_z,
            dispersion,
            dispersion_stderr,
            deviations: Histogram::new(&dev, HISTOGRAM_BINS),
            z,
        });
    }
    let first = levels.iter().min_by_key(|l| l.n).expect("nonempty");
    let constant = 4.0 * first.dispersion * (first.n as f64).powf(-exponent);
    let holds = levels.iter().all(|l| {
        l.dispersion - 3.0 * l.dispersion_stderr <= constant * (l.n as f64).powf(exponent)
    });
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.dispersion > 0.0)
        .map(|l| ((l.n as f64).ln(), l.dispersion.ln()))
        .collect();
    Ok(ConcentrationReport {
        d,
        p,
        exponent,
        constant,
        fitted_exponent: ols_slope(&pts),
        levels,
        holds,
    })
}

fn ols_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_common(d: usize, p: f64, replicates: usize) -> Result<()> {
    if d == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    if replicates < 2 {
        return invalid(format!("need at least 2 replicates, got {replicates}"));
    }
    Ok(())
}
