use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimate::{mean_stderr, try_run_replicates, EstimateLabel, EstimateRecord};
use crate::point_process::{grid_measure, poisson_count, BoxRegion, RngStream, WeightedMeasure};
use crate::transport::{
    lattice_w1, transport_cost_1d, transport_cost_integral, w1_dual_lower_bound, IntegerMasses,
    PlanEntry, TransportResult,
};

/// The chain plan on unit atoms `0, …, L−1` from `κ₁` on the left half and
/// `κ₂` on the right half to the mean level `κ = (κ₁ + κ₂)/2`: across the
/// edge `k → k+1` it moves `(k+1)Δ/2` for `k < L/2` and `(L−1−k)Δ/2`
/// beyond, `Δ = κ₁ − κ₂` (leftwards when negative). Every move has length
/// one, so the cost is `Σ |flow| = |Δ| L²/8` for every `p`.
pub fn grid_1d_plan(kappa1: f64, kappa2: f64, l: usize) -> Result<TransportResult> {
    if l < 2 || l % 2 != 0 {
        return invalid(format!("L must be even and at least 2, got {l}"));
    }
    if !(kappa1 > 0.0 && kappa2 > 0.0 && kappa1.is_finite() && kappa2.is_finite()) {
        return invalid("levels must be positive");
    }
    let half = l / 2;
    let delta = kappa1 - kappa2;
    let level = |k: usize| if k < half { kappa1 } else { kappa2 };
    // signed flow across edge k → k+1
    let flow = |k: usize| {
        if k < half {
            (k + 1) as f64 * delta / 2.0
        } else {
            (l - 1 - k) as f64 * delta / 2.0
        }
    };
    if delta == 0.0 {
        let plan = (0..l)
            .map(|k| PlanEntry {
                source: k,
                target: k,
                mass: level(k),
            })
            .collect();
        return Ok(TransportResult {
            cost: 0.0,
            plan,
            p: 1.0,
        });
    }
    let mut out = vec![0.0; l];
    for k in 0..l - 1 {
        let m = flow(k);
        if m > 0.0 {
            out[k] += m;
        } else {
            out[k + 1] -= m;
        }
    }
    if let Some(k) = (0..l).find(|&k| out[k] > level(k)) {
        return Err(Error::Infeasible(format!(
            "atom {k} would send {} but holds {}",
            out[k],
            level(k)
        )));
    }
    let mut plan = Vec::with_capacity(2 * l);
    let mut cost = 0.0;
    for k in 0..l {
        let stay = level(k) - out[k];
        if stay > 0.0 {
            plan.push(PlanEntry {
                source: k,
                target: k,
                mass: stay,
            });
        }
    }
    for k in 0..l - 1 {
        let m = flow(k);
        if m > 0.0 {
            plan.push(PlanEntry {
                source: k,
                target: k + 1,
                mass: m,
            });
        } else if m < 0.0 {
            plan.push(PlanEntry {
                source: k + 1,
                target: k,
                mass: -m,
            });
        }
        cost += m.abs();
    }
    Ok(TransportResult { cost, plan, p: 1.0 })
}

/// Constant `C` in `cost(grid_1d_plan) = C · L² |κ₁ − κ₂|`.
pub const GRID_1D_CONSTANT: f64 = 0.125;

/// One replicate of the grid defect: exact value and the two bounds, all
/// normalized by `|Q| = L^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDefectSample {
    pub counts: Vec<u64>,
    pub exact: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDefectEstimate {
    pub record: EstimateRecord,
    pub lower_mean: f64,
    pub lower_stderr: f64,
    pub upper_mean: f64,
    pub upper_stderr: f64,
    /// `lower ≤ exact ≤ upper` on every replicate, up to `1e-9` relative.
    pub sandwich_holds: bool,
    pub samples: Vec<GridDefectSample>,
}

/// Lattice `{0.5, …, L − 0.5}^d` on `Q = (0, L)^d`, split into the `2^d`
/// octants of side `L/2`; octant `i` carries level `κ_i = counts[i]/(L/2)^d`
/// on its lattice points and the target is the mean level `κ`. Octants are
/// numbered by the bits of their position, bit `k` for axis `k`.
pub fn grid_defect_replicate(
    l: usize,
    d: usize,
    p: f64,
    counts: &[u64],
) -> Result<GridDefectSample> {
    if l < 2 || l % 2 != 0 {
        return invalid(format!("L must be even and at least 2, got {l}"));
    }
    if d == 0 || counts.len() != 1 << d {
        return invalid(format!(
            "need 2^d = {} octant counts, got {}",
            1usize << d,
            counts.len()
        ));
    }
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    let half = l / 2;
    let n = l.pow(d as u32);
    let volume = n as f64;
    let octant_volume = half.pow(d as u32) as f64;
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Ok(GridDefectSample {
            counts: counts.to_vec(),
            exact: 0.0,
            lower: 0.0,
            upper: 0.0,
        });
    }
    // level of octant i is 2^d·counts[i]/L^d, the target total/L^d
    let scaled: Vec<i64> = counts.iter().map(|&c| (c << d) as i64).collect();
    let octant_of = |mut site: usize| {
        let mut o = 0;
        for k in (0..d).rev() {
            if site % l >= half {
                o |= 1 << k;
            }
            site /= l;
        }
        o
    };

    let cube = BoxRegion::cube(d, l as f64)?;
    let sites = grid_measure(&cube, &vec![l; d], volume)?;
    let exact = if p == 1.0 {
        let supply: Vec<i64> = (0..n)
            .map(|s| scaled[octant_of(s)] - total as i64)
            .collect();
        lattice_w1(&vec![l; d], &supply)? / volume
    } else {
        let src: Vec<usize> = (0..n).filter(|&s| counts[octant_of(s)] > 0).collect();
        let coords: Vec<f64> = src.iter().flat_map(|&s| sites.point(s).to_vec()).collect();
        let weights: Vec<f64> = src
            .iter()
            .map(|&s| scaled[octant_of(s)] as f64 / volume)
            .collect();
        let source = WeightedMeasure::new(d, coords, weights)?;
        let target = sites.scaled(total as f64 / volume)?;
        let masses = IntegerMasses {
            supply: src.iter().map(|&s| scaled[octant_of(s)]).collect(),
            demand: vec![total as i64; n],
            scale: volume,
        };
        transport_cost_integral(&source, &target, &masses, p)?.cost
    };
    let exact = exact / volume;

    let kappa = total as f64 / volume;
    let levels: Vec<f64> = counts.iter().map(|&c| c as f64 / octant_volume).collect();
    let mid = half as f64;
    let sign = |x: &[f64]| {
        let mut o = 0;
        for (k, &xk) in x.iter().enumerate() {
            if xk >= mid {
                o |= 1 << k;
            }
        }
        (levels[o] - kappa).signum()
    };
    let xi = |x: &[f64]| {
        x.iter()
            .map(|&xk| (xk - mid).abs())
            .fold(f64::INFINITY, f64::min)
            * sign(x)
    };
    let source_weights: Vec<f64> = (0..n).map(|s| levels[octant_of(s)]).collect();
    let target = sites.scaled(kappa)?;
    let lower = if source_weights.iter().all(|&w| w > 0.0) {
        let source = WeightedMeasure::new(d, sites.coords().to_vec(), source_weights)?;
        w1_dual_lower_bound(&source, &target, xi, 1.0)?
    } else {
        // empty octants: integrate ξ against the signed difference directly
        let s: f64 = (0..n)
            .map(|a| xi(sites.point(a)) * (source_weights[a] - kappa))
            .sum();
        s.abs()
    } / volume;

    let upper = layered_upper(l, d, p, &levels)? / volume;
    Ok(GridDefectSample {
        counts: counts.to_vec(),
        exact,
        lower,
        upper,
    })
}

/// Cost of the layer-by-layer construction: at step `k` the boxes are
/// merged in pairs along axis `k`, each pair being a product of identical
/// one-dimensional problems of length `L`. The steps are chained by the
/// triangle inequality for `W_p`.
fn layered_upper(l: usize, d: usize, p: f64, levels: &[f64]) -> Result<f64> {
    let half = l / 2;
    let mut current = levels.to_vec();
    let mut root_sum = 0.0;
    for axis in 0..d {
        // boxes after step `axis` span (0, L) along axes < axis
        let lines = half.pow((d - axis - 1) as u32) * l.pow(axis as u32);
        let mut step = 0.0;
        let mut next = current.clone();
        for o in 0..current.len() {
            if o & (1 << axis) != 0 {
                continue;
            }
            let partner = o | (1 << axis);
            let (k1, k2) = (current[o], current[partner]);
            let mean = 0.5 * (k1 + k2);
            next[o] = mean;
            next[partner] = mean;
            step += lines as f64 * line_cost(k1, k2, l, p)?;
        }
        current = next;
        root_sum += step.powf(1.0 / p);
    }
    Ok(root_sum.powf(p))
}

/// Transport cost along one line: the chain plan when it is feasible, else
/// the optimal monotone coupling.
fn line_cost(k1: f64, k2: f64, l: usize, p: f64) -> Result<f64> {
    if k1 == k2 {
        return Ok(0.0);
    }
    if k1 > 0.0 && k2 > 0.0 {
        if let Ok(plan) = grid_1d_plan(k1, k2, l) {
            return Ok(plan.cost);
        }
    }
    let half = l / 2;
    let xs: Vec<f64> = (0..l).map(|k| k as f64).collect();
    let src: Vec<(f64, f64)> = (0..l)
        .map(|k| (xs[k], if k < half { k1 } else { k2 }))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let source = WeightedMeasure::new(
        1,
        src.iter().map(|a| a.0).collect(),
        src.iter().map(|a| a.1).collect(),
    )?;
    let target = WeightedMeasure::new(1, xs, vec![0.5 * (k1 + k2); l])?;
    transport_cost_1d(&source, &target, p)
}

/// Monte Carlo over independent octant counts `μ_i ~ Poisson((L/2)^d)`.
pub fn grid_defect_experiment(
    l: usize,
    d: usize,
    p: f64,
    replicates: usize,
    stream: RngStream,
) -> Result<GridDefectEstimate> {
    if d < 3 {
        return invalid(format!("the grid defect experiment needs d ≥ 3, got {d}"));
    }
    if l < 4 || l % 2 != 0 {
        return invalid(format!("L must be even and at least 4, got {l}"));
    }
    let mean = ((l / 2) as f64).powi(d as i32);
    let samples = try_run_replicates(replicates, |r| {
        let mut rng = stream.replicate(r).rng();
        let counts: Vec<u64> = (0..1usize << d)
            .map(|_| poisson_count(mean, &mut rng))
            .collect();
        grid_defect_replicate(l, d, p, &counts)
    })?;
    let exact: Vec<f64> = samples.iter().map(|s| s.exact).collect();
    let lower: Vec<f64> = samples.iter().map(|s| s.lower).collect();
    let upper: Vec<f64> = samples.iter().map(|s| s.upper).collect();
    let record = EstimateRecord::from_samples(
        EstimateLabel::Defect,
        l as f64,
        p,
        d,
        &exact,
        stream.master_seed,
        None,
    )?;
    let (lower_mean, lower_stderr) = mean_stderr(&lower)?;
    let (upper_mean, upper_stderr) = mean_stderr(&upper)?;
    let tol = |x: f64| 1e-9 * x.abs().max(1e-300);
    let sandwich_holds = samples
        .iter()
        .all(|s| s.lower <= s.exact + tol(s.exact) && s.exact <= s.upper + tol(s.upper));
    Ok(GridDefectEstimate {
        record,
        lower_mean,
        lower_stderr,
        upper_mean,
        upper_stderr,
        sandwich_holds,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_expanded_schedule() {
        // L = 4, Δ = 0.02: flows 0.01, 0.02, 0.01
        let plan = grid_1d_plan(1.01, 0.99, 4).unwrap();
        assert!((plan.cost - 0.04).abs() < 1e-15);
        assert!((plan.cost - GRID_1D_CONSTANT * 16.0 * 0.02).abs() < 1e-15);
    }

    #[test]
    fn equal_levels_cost_nothing() {
        assert_eq!(grid_1d_plan(1.0, 1.0, 6).unwrap().cost, 0.0);
        assert!(grid_1d_plan(1.0, 1.0, 5).is_err());
    }

    #[test]
    fn overdrawn_atom_is_infeasible() {
        // atom 2 would send 3Δ/2 = 1.35 but holds 1
        assert!(matches!(
            grid_1d_plan(1.0, 0.1, 6),
            Err(Error::Infeasible(_))
        ));
    }
}
