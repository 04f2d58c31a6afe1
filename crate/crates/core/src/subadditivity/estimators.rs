use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::estimate::{try_run_replicates, EstimateLabel, EstimateRecord};
use crate::point_process::{
    grid_measure, sample_poisson_pp, BoxRegion, RngStream, WeightedMeasure,
};
use crate::transport::transport_cost;

/// Largest reference grid accepted by the `f_ref` estimators.
pub const GRID_ATOM_LIMIT: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FRefEstimate {
    pub record: EstimateRecord,
    /// `(√d / (2g))^p`: transport cost per unit mass from the grid atoms to
    /// the uniform measure on their cells.
    pub discretization_bound: f64,
    /// Grid spacing exceeds half the mean nearest-neighbour distance.
    pub coarse_resolution: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FBiEstimate {
    pub record: EstimateRecord,
    /// Replicates with `λ(Q_L) = 0 < μ(Q_L)`, left out of the mean.
    pub excluded: usize,
}

/// Mean distance to the nearest point of a unit-intensity Poisson process:
/// `Γ(1 + 1/d) · ω_d^{−1/d}` with `ω_d` the volume of the unit ball.
pub fn poisson_nn_distance(d: usize) -> f64 {
    let df = d as f64;
    let omega = std::f64::consts::PI.powf(df / 2.0) / gamma(df / 2.0 + 1.0);
    gamma(1.0 + 1.0 / df) * omega.powf(-1.0 / df)
}

/// Grid cells per axis for a cube side: `round(side · g)`, at least one.
pub fn grid_resolution(side: f64, grid_per_unit: usize) -> usize {
    ((side * grid_per_unit as f64).round() as usize).max(1)
}

/// `(1/|Q|) W^p(μ, κ·grid)` for one configuration, with the grid of
/// `grid_per_unit` cells per unit length standing in for Lebesgue measure
/// and `κ = μ(Q)/|Q|`. Atoms of `mu` outside `cube` are ignored; an empty
/// restriction costs 0.
pub fn f_ref_sample(
    mu: &WeightedMeasure,
    cube: &BoxRegion,
    grid_per_unit: usize,
    p: f64,
) -> Result<f64> {
    let mu = mu.restrict(cube);
    if mu.is_empty() {
        return Ok(0.0);
    }
    let res: Vec<usize> = cube
        .sides()
        .iter()
        .map(|&s| grid_resolution(s, grid_per_unit))
        .collect();
    let grid = grid_measure(cube, &res, mu.mass())?;
    Ok(transport_cost(&mu, &grid, p)?.cost / cube.volume())
}

/// `(1/|Q|) W^p(μ, κλ)` with `κ = μ(Q)/λ(Q)`; `None` when `λ(Q) = 0 < μ(Q)`.
pub fn f_bi_sample(
    mu: &WeightedMeasure,
    lambda: &WeightedMeasure,
    cube: &BoxRegion,
    p: f64,
) -> Result<Option<f64>> {
    let mu = mu.restrict(cube);
    let lambda = lambda.restrict(cube);
    if mu.is_empty() {
        return Ok(Some(0.0));
    }
    if lambda.is_empty() {
        return Ok(None);
    }
    let target = lambda.scaled(mu.mass() / lambda.mass())?;
    Ok(Some(transport_cost(&mu, &target, p)?.cost / cube.volume()))
}

pub(crate) fn check_scale(l: f64, d: usize, p: f64, replicates: usize) -> Result<()> {
    if !(l.is_finite() && l >= 1.0) {
        return invalid(format!("L must be at least 1, got {l}"));
    }
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

pub(crate) fn check_grid(l: f64, d: usize, grid_per_unit: usize) -> Result<usize> {
    if grid_per_unit < 2 {
        return invalid(format!(
            "grid_per_unit must be at least 2, got {grid_per_unit}"
        ));
    }
    let res = grid_resolution(l, grid_per_unit);
    let atoms = res.checked_pow(d as u32).unwrap_or(usize::MAX);
    if atoms > GRID_ATOM_LIMIT {
        return invalid(format!(
            "reference grid of {atoms} atoms exceeds the limit {GRID_ATOM_LIMIT}"
        ));
    }
    Ok(res)
}

/// Monte Carlo estimate of `f_ref(L) = E[(1/L^d) W^p(μ, κ·Leb)]` on `Q_L`
/// with unit-intensity Poisson `μ`; replicate `r` uses `stream.replicate(r)`.
pub fn estimate_f_ref(
    l: f64,
    d: usize,
    p: f64,
    replicates: usize,
    grid_per_unit: usize,
    stream: RngStream,
) -> Result<FRefEstimate> {
    check_scale(l, d, p, replicates)?;
    let res = check_grid(l, d, grid_per_unit)?;
    let cube = BoxRegion::cube(d, l)?;
    let samples = try_run_replicates(replicates, |r| {
        let mu = sample_poisson_pp(&cube, 1.0, stream.replicate(r))?.to_measure();
        f_ref_sample(&mu, &cube, grid_per_unit, p)
    })?;
    let record = EstimateRecord::from_samples(
        EstimateLabel::FRef,
        l,
        p,
        d,
        &samples,
        stream.master_seed,
        Some(res),
    )?;
    let spacing = l / res as f64;
    Ok(FRefEstimate {
        record,
        discretization_bound: ((d as f64).sqrt() * spacing / 2.0).powf(p),
        coarse_resolution: spacing > 0.5 * poisson_nn_distance(d),
    })
}

/// Monte Carlo estimate of `f_bi(L) = E[(1/L^d) W^p(μ, κλ)]` for independent
/// unit-intensity Poisson `μ, λ` on `Q_L`.
pub fn estimate_f_bi(
    l: f64,
    d: usize,
    p: f64,
    replicates: usize,
    stream: RngStream,
) -> Result<FBiEstimate> {
    check_scale(l, d, p, replicates)?;
    let cube = BoxRegion::cube(d, l)?;
    let samples = try_run_replicates(replicates, |r| {
        let s = stream.replicate(r);
        let mu = sample_poisson_pp(&cube, 1.0, s.child(0))?.to_measure();
        let lambda = sample_poisson_pp(&cube, 1.0, s.child(1))?.to_measure();
        f_bi_sample(&mu, &lambda, &cube, p)
    })?;
    let kept: Vec<f64> = samples.iter().flatten().copied().collect();
    let record =
        EstimateRecord::from_samples(EstimateLabel::FBi, l, p, d, &kept, stream.master_seed, None)?;
    Ok(FBiEstimate {
        record,
        excluded: samples.len() - kept.len(),
    })
}
