use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub d: usize,
    pub p: f64,
    pub slope: f64,
    pub intercept: f64,
    /// 95% half-width of the slope.
    pub half_width: f64,
    /// For `d = 2`, the means times `(n / log n)^{p/2}`.
    pub normalized: Option<Vec<f64>>,
}

/// Weighted least squares of `log mean` on `log n` for `d ≠ 2`. For `d = 2`
/// the means are multiplied by `(n / log n)^{p/2}` and regressed on
/// `1 / log n`, so the intercept estimates the limit constant.
///
/// Weights are inverse variances of the regressed quantity when every
/// stderr is positive, uniform otherwise. The half-width is inflated by the
/// square root of the reduced χ² when that exceeds 1.
pub fn rate_fit(
    scales: &[f64],
    means: &[f64],
    stderrs: &[f64],
    d: usize,
    p: f64,
) -> Result<RateFit> {
    let m = scales.len();
    if means.len() != m || stderrs.len() != m {
        return invalid("scales, means and stderrs must have equal length");
    }
    let mut distinct = scales.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return invalid(format!(
            "a rate fit needs at least 3 distinct scales, got {}",
            distinct.len()
        ));
    }
    let min_scale = if d == 2 { 1.0 } else { 0.0 };
    if scales.iter().any(|&n| !(n.is_finite() && n > min_scale)) {
        return invalid("scales must be finite and positive (above 1 for d = 2)");
    }
    if means.iter().any(|&v| !(v.is_finite() && v > 0.0))
        || stderrs.iter().any(|&s| !(s.is_finite() && s >= 0.0))
    {
        return invalid("means must be positive and stderrs nonnegative");
    }
    let (x, y, sy, normalized): (Vec<f64>, Vec<f64>, Vec<f64>, _) = if d == 2 {
        let f: Vec<f64> = scales.iter().map(|&n| (n / n.ln()).powf(p / 2.0)).collect();
        let y: Vec<f64> = (0..m).map(|k| means[k] * f[k]).collect();
        let sy = (0..m).map(|k| stderrs[k] * f[k]).collect();
        (
            scales.iter().map(|n| 1.0 / n.ln()).collect(),
            y.clone(),
            sy,
            Some(y),
        )
    } else {
        let sy = (0..m).map(|k| stderrs[k] / means[k]).collect();
        (
            scales.iter().map(|n| n.ln()).collect(),
            means.iter().map(|v| v.ln()).collect(),
            sy,
            None,
        )
    };
    let known = sy.iter().all(|&s| s > 0.0);
    let w: Vec<f64> = if known {
        sy.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; m]
    };
    let sw: f64 = w.iter().sum();
    let mx = (0..m).map(|k| w[k] * x[k]).sum::<f64>() / sw;
    let my = (0..m).map(|k| w[k] * y[k]).sum::<f64>() / sw;
    let sxx: f64 = (0..m).map(|k| w[k] * (x[k] - mx).powi(2)).sum();
    let sxy: f64 = (0..m).map(|k| w[k] * (x[k] - mx) * (y[k] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = (0..m)
        .map(|k| w[k] * (y[k] - intercept - slope * x[k]).powi(2))
        .sum();
    let dof = (m - 2) as f64;
    let var = if known {
        (chi2 / dof).max(1.0) / sxx
    } else {
        chi2 / dof / sxx
    };
    Ok(RateFit {
        d,
        p,
        slope,
        intercept,
        half_width: Z95 * var.sqrt(),
        normalized,
    })
}

/// Slope of `log E[W^p]` against `log n`: `−p/2` for `d = 1`, `−p/d` for
/// `d ≥ 3`. `None` for `d = 2`, where the rate carries a log factor.
pub fn expected_slope(d: usize, p: f64) -> Option<f64> {
    match d {
        0 | 2 => None,
        1 => Some(-p / 2.0),
        _ => Some(-p / d as f64),
    }
}
