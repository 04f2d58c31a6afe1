//! Exact discrete optimal transport for the cost `|x − y|^p`.

mod brute;
mod dual;
pub mod flow;
pub mod lapjv;
mod lattice;
pub mod network_simplex;
mod one_dim;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_cost, BRUTE_FORCE_MAX};
pub use dual::w1_dual_lower_bound;
pub use lattice::lattice_w1;
pub use one_dim::transport_cost_1d;

use crate::error::{invalid, Error, Result};
use crate::point_process::{PointCloud, WeightedMeasure};

/// Relative tolerance on the total-mass difference of a transport problem.
pub const MASS_TOL: f64 = 1e-9;
/// Denominator used when weights are not already on a common integer grid.
pub const GENERIC_DENOMINATOR: f64 = 1_099_511_627_776.0; // 2^40

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    /// `W_p^p`, i.e. `Σ mass · |x − y|^p` over the plan.
    pub cost: f64,
    pub plan: Vec<PlanEntry>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RebalancedPair {
    pub source: WeightedMeasure,
    pub target: WeightedMeasure,
    pub kappa: f64,
}

#[inline]
pub fn ground_cost(x: &[f64], y: &[f64], p: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if p == 2.0 {
        sq
    } else if p == 1.0 {
        sq.sqrt()
    } else {
        sq.sqrt().powf(p)
    }
}

#[inline]
pub(crate) fn ground_cost_1d(x: f64, y: f64, p: f64) -> f64 {
    let d = (x - y).abs();
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("cost exponent must satisfy p >= 1, got {p}"));
    }
    Ok(())
}

/// Validates a transport pair; returns `true` when both sides are empty.
pub(crate) fn check_masses(source: &WeightedMeasure, target: &WeightedMeasure) -> Result<bool> {
    if source.dim() != target.dim() {
        return invalid(format!(
            "dimension mismatch: {} vs {}",
            source.dim(),
            target.dim()
        ));
    }
    if source.is_empty() && target.is_empty() {
        return Ok(true);
    }
    let (a, b) = (source.mass(), target.mass());
    if (a - b).abs() > MASS_TOL * a.max(b) {
        return Err(Error::Infeasible(format!(
            "total masses differ: {a} vs {b}"
        )));
    }
    Ok(false)
}

/// Integer supplies representing two equal-mass weight vectors, and the
/// factor `scale` with `integer = scale · mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerMasses {
    pub supply: Vec<i64>,
    pub demand: Vec<i64>,
    pub scale: f64,
}

/// Puts two weight vectors on a common integer grid.
///
/// Integral weights are used as they are. Two uniform weight vectors
/// `n × α` and `m × β` with `nα = mβ` become `m/g` and `n/g` with
/// `g = gcd(n, m)`, which is exact. Anything else is rounded to multiples of
/// `2^-40` of the total (largest-remainder rounding on each side), which
/// moves at most `(n + m) · 2^-40 · mass` and hence perturbs `W_p^p` by at
/// most that amount times `diam^p`.
pub fn integer_masses(a: &[f64], b: &[f64]) -> IntegerMasses {
    let integral = |w: &[f64]| w.iter().all(|x| x.fract() == 0.0 && *x < 9e15);
    if integral(a) && integral(b) {
        let sa: i64 = a.iter().map(|&x| x as i64).sum();
        let sb: i64 = b.iter().map(|&x| x as i64).sum();
        if sa == sb {
            return IntegerMasses {
                supply: a.iter().map(|&x| x as i64).collect(),
                demand: b.iter().map(|&x| x as i64).collect(),
                scale: 1.0,
            };
        }
    }
    let uniform = |w: &[f64]| w.iter().all(|&x| x == w[0]);
    if !a.is_empty() && !b.is_empty() && uniform(a) && uniform(b) {
        let (n, m) = (a.len() as i64, b.len() as i64);
        let g = gcd(n, m);
        return IntegerMasses {
            supply: vec![m / g; a.len()],
            demand: vec![n / g; b.len()],
            scale: (m / g) as f64 / a[0],
        };
    }
    let total: f64 = a.iter().sum::<f64>().max(b.iter().sum::<f64>());
    let mut units = GENERIC_DENOMINATOR;
    while total * units > 2f64.powi(61) {
        units /= 2.0;
    }
    let target = (total * units).round() as i64;
    IntegerMasses {
        supply: round_to_total(a, target),
        demand: round_to_total(b, target),
        scale: target as f64 / total,
    }
}

fn round_to_total(w: &[f64], target: i64) -> Vec<i64> {
    let sum: f64 = w.iter().sum();
    let exact: Vec<f64> = w.iter().map(|x| x / sum * target as f64).collect();
    let mut out: Vec<i64> = exact.iter().map(|x| x.floor() as i64).collect();
    let mut missing = target - out.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&i, &j| {
        (exact[j] - exact[j].floor())
            .total_cmp(&(exact[i] - exact[i].floor()))
            .then(i.cmp(&j))
    });
    let mut k = 0;
    while missing > 0 {
        out[order[k % order.len()]] += 1;
        missing -= 1;
        k += 1;
    }
    while missing < 0 {
        let i = order[order.len() - 1 - (k % order.len())];
        if out[i] > 0 {
            out[i] -= 1;
            missing += 1;
        }
        k += 1;
    }
    out
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs().max(1)
}

/// Optimal transport between two equal-mass atomic measures.
pub fn transport_cost(
    source: &WeightedMeasure,
    target: &WeightedMeasure,
    p: f64,
) -> Result<TransportResult> {
    check_exponent(p)?;
    if check_masses(source, target)? {
        return Ok(TransportResult {
            cost: 0.0,
            plan: Vec::new(),
            p,
        });
    }
    if source == target {
        let plan = (0..source.len())
            .map(|i| PlanEntry {
                source: i,
                target: i,
                mass: source.weight(i),
            })
            .collect();
        return Ok(TransportResult { cost: 0.0, plan, p });
    }
    let masses = integer_masses(source.weights(), target.weights());
    transport_cost_integral(source, target, &masses, p)
}

/// As [`transport_cost`], with the integer representation of the two weight
/// vectors supplied by the caller (e.g. an exact rational one).
pub fn transport_cost_integral(
    source: &WeightedMeasure,
    target: &WeightedMeasure,
    masses: &IntegerMasses,
    p: f64,
) -> Result<TransportResult> {
    check_exponent(p)?;
    if masses.supply.len() != source.len() || masses.demand.len() != target.len() {
        return invalid("integer masses do not match the measures");
    }
    let sol = flow::solve_bipartite(&masses.supply, &masses.demand, |i, j| {
        ground_cost(source.point(i), target.point(j), p)
    })?;
    let plan = sol
        .arcs
        .iter()
        .map(|a| PlanEntry {
            source: a.source,
            target: a.sink,
            mass: a.flow as f64 / masses.scale,
        })
        .collect();
    Ok(TransportResult {
        cost: sol.total / masses.scale,
        plan,
        p,
    })
}

/// Above this size the assignment is solved by network simplex instead of
/// the dense O(n²)-memory assignment solver.
pub const DENSE_ASSIGNMENT_LIMIT: usize = 4096;

/// Minimum-cost perfect matching between two equal-size clouds.
pub fn assignment_cost(x: &PointCloud, y: &PointCloud, p: f64) -> Result<TransportResult> {
    check_exponent(p)?;
    if x.len() != y.len() {
        return invalid(format!(
            "assignment needs equal sizes, got {} and {}; use transport_cost with rebalance",
            x.len(),
            y.len()
        ));
    }
    if x.dim() != y.dim() {
        return invalid("dimension mismatch");
    }
    let n = x.len();
    if n == 0 {
        return Ok(TransportResult {
            cost: 0.0,
            plan: Vec::new(),
            p,
        });
    }
    if x.dim() == 1 {
        // monotone matching is optimal for convex costs on the line
        let order = |c: &PointCloud| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c.point(a)[0].total_cmp(&c.point(b)[0]));
            idx
        };
        let (ox, oy) = (order(x), order(y));
        let plan: Vec<PlanEntry> = ox
            .iter()
            .zip(&oy)
            .map(|(&i, &j)| PlanEntry {
                source: i,
                target: j,
                mass: 1.0,
            })
            .collect();
        let total = plan
            .iter()
            .map(|e| ground_cost(x.point(e.source), y.point(e.target), p))
            .sum();
        return Ok(TransportResult {
            cost: total,
            plan,
            p,
        });
    }
    if n > DENSE_ASSIGNMENT_LIMIT {
        return transport_cost(&x.to_measure(), &y.to_measure(), p);
    }
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        let xi = x.point(i);
        for j in 0..n {
            cost.push(ground_cost(xi, y.point(j), p));
        }
    }
    let sol = lapjv::lapjv(n, &cost);
    let total = sol.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    let plan = sol
        .iter()
        .enumerate()
        .map(|(i, &j)| PlanEntry {
            source: i,
            target: j,
            mass: 1.0,
        })
        .collect();
    Ok(TransportResult {
        cost: total,
        plan,
        p,
    })
}

/// Rescales `lambda` to the mass of `mu`: `κ = μ(Ω)/λ(Ω)`, target `κλ`.
pub fn rebalance(mu: &WeightedMeasure, lambda: &WeightedMeasure) -> Result<RebalancedPair> {
    if mu.dim() != lambda.dim() {
        return invalid("dimension mismatch");
    }
    let lm = lambda.mass();
    if lm <= 0.0 {
        if mu.is_empty() {
            return Ok(RebalancedPair {
                source: mu.clone(),
                target: lambda.clone(),
                kappa: 1.0,
            });
        }
        return Err(Error::Infeasible(format!(
            "reference measure is empty while the source has mass {}",
            mu.mass()
        )));
    }
    let kappa = mu.mass() / lm;
    Ok(RebalancedPair {
        source: mu.clone(),
        target: lambda.scaled(kappa)?,
        kappa,
    })
}
