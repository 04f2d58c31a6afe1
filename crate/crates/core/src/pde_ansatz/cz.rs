use serde::{Deserialize, Serialize};

use super::grid::{bin_to_grid, GridField};
use super::neumann::{grad_p_norm, solve_neumann_poisson};
use crate::error::{invalid, Error, Result};
use crate::point_process::{BoxRegion, WeightedMeasure};
use crate::subadditivity::c_bb;
use crate::transport::transport_cost;

/// Extra factor on `c_bb(p)` absorbing the binning of both measures.
pub const DISCRETIZATION_SLACK: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzReport {
    pub p: f64,
    /// `W^p` between the binned measures, as atoms at the cell centers.
    pub transport: f64,
    /// Smallest binned density of `λ`, standing in for `inf λ`.
    pub inf_lambda: f64,
    /// `∫ |∇φ|^p` with `Δφ = μ − λ`, zero flux.
    pub grad_integral: f64,
    /// `∫ |∇φ|^p / (inf λ)^{p−1}`.
    pub pde_bound: f64,
    /// `diam^p(R) / (inf λ)^{p−1} · ∫ |μ − λ|^p`.
    pub cz_bound: f64,
    /// `transport / pde_bound`, zero when both vanish.
    pub pde_ratio: f64,
    pub cz_ratio: f64,
    /// `DISCRETIZATION_SLACK · c_bb(p)`.
    pub threshold: f64,
    pub holds: bool,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Compares the exact transport cost of the binned measures with the
/// Neumann-Poisson bound and the `L^p`-density bound.
pub fn cz_bound_check(
    mu: &WeightedMeasure,
    lambda: &WeightedMeasure,
    region: &BoxRegion,
    resolution: &[usize],
    p: f64,
) -> Result<CzReport> {
    let threshold = DISCRETIZATION_SLACK * c_bb(p)?;
    let mb = bin_to_grid(mu, region, resolution)?;
    let lb = bin_to_grid(lambda, region, resolution)?;
    cz_bound_check_binned(&mb, &lb, p, threshold)
}

pub(crate) fn cz_bound_check_binned(
    mb: &GridField,
    lb: &GridField,
    p: f64,
    threshold: f64,
) -> Result<CzReport> {
    if let Some(cell) = lb.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::VanishingReference { cell });
    }
    let (mm, lm) = (mb.integral(), lb.integral());
    if (mm - lm).abs() > 1e-9 * mm.max(lm) {
        return invalid(format!("binned masses differ: {mm} vs {lm}"));
    }
    let diff = mb.sub(lb)?;
    let transport = if diff.max_abs() == 0.0 {
        0.0
    } else {
        transport_cost(&mb.to_measure()?, &lb.to_measure()?, p)?.cost
    };
    let phi = solve_neumann_poisson(&diff)?;
    let grad_integral = grad_p_norm(&phi, p);
    let inf_lambda = lb.min();
    let pde_bound = grad_integral / inf_lambda.powf(p - 1.0);
    let cz_bound = mb.region.diameter().powf(p) / inf_lambda.powf(p - 1.0) * diff.lp_integral(p);
    let pde_ratio = ratio(transport, pde_bound);
    Ok(CzReport {
        p,
        transport,
        inf_lambda,
        grad_integral,
        pde_bound,
        cz_bound,
        pde_ratio,
        cz_ratio: ratio(transport, cz_bound),
        threshold,
        holds: pde_ratio <= threshold,
    })
}
