use serde::{Deserialize, Serialize};

use super::estimators::{check_grid, check_scale, f_bi_sample, f_ref_sample};
use crate::error::{invalid, Result};
use crate::estimate::{mean_stderr, try_run_replicates, EstimateLabel, EstimateRecord};
use crate::point_process::{sample_poisson_pp, BoxRegion, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BracketTarget {
    /// Matching to the uniform measure, discretized on a grid.
    Reference {
        grid_per_unit: usize,
    },
    Bipartite,
}

/// Weighted least-squares fit of `f(L) = a + b·L^{−γ}` with `γ = (d − 2)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketFit {
    pub gamma: f64,
    /// Extrapolated limit candidate.
    pub a: f64,
    pub b: f64,
    pub a_stderr: f64,
    pub b_stderr: f64,
    /// `f(L) + max(b, 0)·L^{−γ}` at the largest level.
    pub upper_bracket: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketResult {
    pub records: Vec<EstimateRecord>,
    /// Paired differences `f(L_k) − f(L_{k+1})` with their standard errors.
    pub differences: Vec<(f64, f64)>,
    /// Slope of `log(f(L_k) − f(L_{k+1}))` against `log L_k`; needs at
    /// least two positive differences.
    pub defect_exponent: Option<f64>,
    pub non_monotone: bool,
    pub fit: Option<BracketFit>,
}

/// Estimates `f` at `L_k = L0·2^k`, `k < levels`, from nested configurations:
/// each replicate samples once on the largest cube and restricts to the
/// smaller cubes sharing its corner, so level differences are paired.
pub fn recursive_bracket(
    l0: f64,
    levels: usize,
    d: usize,
    p: f64,
    replicates: usize,
    target: BracketTarget,
    stream: RngStream,
) -> Result<BracketResult> {
    if levels == 0 {
        return invalid("levels must be at least 1");
    }
    let scales: Vec<f64> = (0..levels).map(|k| l0 * 2f64.powi(k as i32)).collect();
    let l_max = scales[levels - 1];
    check_scale(l0, d, p, replicates)?;
    let resolutions: Vec<Option<usize>> = match target {
        BracketTarget::Reference { grid_per_unit } => scales
            .iter()
            .map(|&l| check_grid(l, d, grid_per_unit).map(Some))
            .collect::<Result<_>>()?,
        BracketTarget::Bipartite => vec![None; levels],
    };
    let grid_per_unit = match target {
        BracketTarget::Reference { grid_per_unit } => grid_per_unit,
        BracketTarget::Bipartite => 0,
    };
    let outer = BoxRegion::cube(d, l_max)?;
    let cubes: Vec<BoxRegion> = scales
        .iter()
        .map(|&l| BoxRegion::cube(d, l))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<f64>> = try_run_replicates(replicates, |r| {
        let s = stream.replicate(r);
        let mu = sample_poisson_pp(&outer, 1.0, s.child(0))?.to_measure();
        let lambda = match target {
            BracketTarget::Bipartite => {
                Some(sample_poisson_pp(&outer, 1.0, s.child(1))?.to_measure())
            }
            BracketTarget::Reference { .. } => None,
        };
        cubes
            .iter()
            .map(|cube| match &lambda {
                None => f_ref_sample(&mu, cube, grid_per_unit, p),
                // an empty λ has probability e^{-|Q|}; score it 0 like an empty μ
                Some(lam) => Ok(f_bi_sample(&mu, lam, cube, p)?.unwrap_or(0.0)),
            })
            .collect()
    })?;

    let label = match target {
        BracketTarget::Reference { .. } => EstimateLabel::FRef,
        BracketTarget::Bipartite => EstimateLabel::FBi,
    };
    let mut records = Vec::with_capacity(levels);
    for k in 0..levels {
        let col: Vec<f64> = rows.iter().map(|row| row[k]).collect();
        records.push(EstimateRecord::from_samples(
            label,
            scales[k],
            p,
            d,
            &col,
            stream.master_seed,
            resolutions[k],
        )?);
    }
    let mut differences = Vec::new();
    for k in 0..levels.saturating_sub(1) {
        let diff: Vec<f64> = rows.iter().map(|row| row[k] - row[k + 1]).collect();
        differences.push(mean_stderr(&diff)?);
    }
    let non_monotone = differences.iter().any(|&(m, se)| m < -3.0 * se);
    let defect_exponent = defect_exponent(&scales, &differences);
    let fit = if non_monotone {
        None
    } else {
        fit_bracket(&records, d)
    };
    Ok(BracketResult {
        records,
        differences,
        defect_exponent,
        non_monotone,
        fit,
    })
}

/// Least-squares slope of `log diff` against `log L` over the positive differences.
fn defect_exponent(scales: &[f64], differences: &[(f64, f64)]) -> Option<f64> {
    if differences.len() < 2 || differences.iter().any(|&(m, _)| m <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = scales[..differences.len()].iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = differences.iter().map(|&(m, _)| m.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Fits `a + b·L^{−(d−2)/2}` with weights `1/stderr²`. Needs `d ≥ 3` and two
/// or more records; records with zero stderr get the weight of the smallest
/// positive one.
pub fn fit_bracket(records: &[EstimateRecord], d: usize) -> Option<BracketFit> {
    if records.len() < 2 || d < 3 {
        return None;
    }
    let gamma = (d as f64 - 2.0) / 2.0;
    let min_se = records
        .iter()
        .map(|r| r.stderr)
        .filter(|&s| s > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if min_se.is_finite() { min_se } else { 1.0 };
    let (mut sw, mut swx, mut swxx, mut swy, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in records {
        let w = 1.0 / r.stderr.max(floor).powi(2);
        let x = r.scale.powf(-gamma);
        sw += w;
        swx += w * x;
        swxx += w * x * x;
        swy += w * r.mean;
        swxy += w * x * r.mean;
    }
    let det = sw * swxx - swx * swx;
    if det.abs() <= f64::EPSILON * sw * swxx {
        return None;
    }
    let b = (sw * swxy - swx * swy) / det;
    let a = (swy - b * swx) / sw;
    let last = records.last().expect("two records");
    Some(BracketFit {
        gamma,
        a,
        b,
        a_stderr: (swxx / det).sqrt(),
        b_stderr: (sw / det).sqrt(),
        upper_bracket: last.mean + b.max(0.0) * last.scale.powf(-gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let records: Vec<EstimateRecord> = [4.0, 8.0, 16.0]
            .iter()
            .map(|&l: &f64| EstimateRecord {
                label: EstimateLabel::FRef,
                scale: l,
                p: 1.0,
                d: 3,
                mean: 0.7 + 0.4 / l.sqrt(),
                stderr: 0.01,
                replicates: 10,
                seed: 0,
                grid_resolution: None,
            })
            .collect();
        let fit = fit_bracket(&records, 3).unwrap();
        assert!((fit.a - 0.7).abs() < 1e-12);
        assert!((fit.b - 0.4).abs() < 1e-12);
        assert!(fit_bracket(&records[..1], 3).is_none());
        assert!(fit_bracket(&records, 2).is_none());
    }

    #[test]
    fn exponent_of_power_law_differences() {
        let scales = [4.0f64, 8.0, 16.0];
        let diffs: Vec<(f64, f64)> = scales[..2]
            .iter()
            .map(|l| (2.0 * l.powf(-0.5), 0.0))
            .collect();
        assert!((defect_exponent(&scales, &diffs).unwrap() + 0.5).abs() < 1e-12);
    }
}
