use serde::{Deserialize, Serialize};

use super::decompose::{coarse_defect, split};
use super::estimators::grid_resolution;
use crate::error::{invalid, Error, Result};
use crate::point_process::{grid_measure, BoxRegion, Partition, WeightedMeasure};
use crate::transport::{lattice_w1, transport_cost};

/// Triangle decomposition of the bipartite defect `W^p(Σ κ_i χ_i λ, κλ)`
/// through the interpolating measures with per-cell levels
/// `θ_i = κ − κ_i + θ`, Lebesgue measure on each cell replaced by its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteDefect {
    pub theta: f64,
    /// `2 max_i |κ − κ_i|` over cells carrying reference mass.
    pub theta_required: f64,
    pub kappa: f64,
    pub kappas: Vec<f64>,
    pub thetas: Vec<f64>,
    /// `θ Σ_i W^p(λ_i, ρ_i·grid_i)` with `ρ_i = λ(R_i)/|R_i|`.
    pub leg_lambda_grid: f64,
    /// `W^p(Σ_i θ ρ_i grid_i, Σ_i θ_i ρ_i grid_i)`.
    pub leg_grid: f64,
    /// `Σ_i θ_i W^p(ρ_i·grid_i, λ_i)`.
    pub leg_grid_lambda: f64,
    /// `3^{p−1}` times the sum of the legs.
    pub bound: f64,
    pub direct: f64,
    pub holds: bool,
    pub grid_per_unit: usize,
}

/// `|R|^{−(d−2)/(2d)}`.
pub fn default_theta(region: &BoxRegion) -> f64 {
    let d = region.dim() as f64;
    region.volume().powf(-(d - 2.0) / (2.0 * d))
}

pub fn bipartite_defect(
    mu: &WeightedMeasure,
    lambda: &WeightedMeasure,
    partition: &Partition,
    theta: f64,
    p: f64,
    grid_per_unit: usize,
) -> Result<BipartiteDefect> {
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return invalid(format!("theta must be positive, got {theta}"));
    }
    if grid_per_unit == 0 {
        return invalid("grid_per_unit must be positive");
    }
    if mu.dim() != lambda.dim() || mu.dim() != partition.parent().dim() {
        return invalid("dimension mismatch between measures and partition");
    }
    let mus = split(mu, partition);
    let lams = split(lambda, partition);
    let k = partition.len();
    let m_total: f64 = mus.masses.iter().sum();
    let l_total: f64 = lams.masses.iter().sum();
    if l_total <= 0.0 {
        return Err(Error::VanishingReference { cell: 0 });
    }
    let kappa = m_total / l_total;
    let mut kappas = vec![kappa; k];
    let mut required: f64 = 0.0;
    for i in 0..k {
        if lams.masses[i] > 0.0 {
            kappas[i] = mus.masses[i] / lams.masses[i];
            required = required.max(2.0 * (kappa - kappas[i]).abs());
        } else if mus.masses[i] > 0.0 {
            return Err(Error::InfeasibleCell {
                cell: i,
                mu_mass: mus.masses[i],
            });
        }
    }
    if theta < required {
        return Err(Error::ThetaTooSmall { theta, required });
    }
    if let Some(i) = (0..k).find(|&i| lams.masses[i] > 0.0 && kappas[i] < theta) {
        return invalid(format!(
            "theta = {theta} exceeds kappa_{i} = {}, so (kappa_i - theta) lambda is not a measure",
            kappas[i]
        ));
    }
    let thetas: Vec<f64> = kappas.iter().map(|k_i| kappa - k_i + theta).collect();

    let mut grids = Vec::with_capacity(k);
    let mut w = vec![0.0; k];
    for (i, cell) in partition.cells().iter().enumerate() {
        let res: Vec<usize> = cell
            .sides()
            .iter()
            .map(|&s| grid_resolution(s, grid_per_unit))
            .collect();
        if lams.masses[i] > 0.0 {
            let g = grid_measure(cell, &res, lams.masses[i])?;
            w[i] = transport_cost(&lams.cells[i], &g, p)?.cost;
            grids.push(Some(g));
        } else {
            grids.push(None);
        }
    }
    let leg_lambda_grid = theta * w.iter().sum::<f64>();
    let leg_grid_lambda: f64 = (0..k).map(|i| thetas[i] * w[i]).sum();
    let leg_grid = grid_leg(
        partition,
        &grids,
        &mus.masses,
        &lams.masses,
        theta,
        &thetas,
        p,
        grid_per_unit,
    )?;

    let (direct, _) = coarse_defect(&lams, &mus.masses, p)?;
    let bound = 3f64.powf(p - 1.0) * (leg_lambda_grid + leg_grid + leg_grid_lambda);
    Ok(BipartiteDefect {
        theta,
        theta_required: required,
        kappa,
        kappas,
        thetas,
        leg_lambda_grid,
        leg_grid,
        leg_grid_lambda,
        bound,
        direct,
        holds: direct <= bound * (1.0 + 1e-9) + 1e-12,
        grid_per_unit,
    })
}

/// Middle leg. For `p = 1` with integer masses and cell grids that tile one
/// isotropic lattice, only the signed difference `(μ_i − κλ_i)/G_i` per grid
/// atom matters and the exact lattice solver is used.
fn grid_leg(
    partition: &Partition,
    grids: &[Option<WeightedMeasure>],
    mu_masses: &[f64],
    lam_masses: &[f64],
    theta: f64,
    thetas: &[f64],
    p: f64,
    grid_per_unit: usize,
) -> Result<f64> {
    if p == 1.0 {
        if let Some(v) = lattice_leg(partition, grids, mu_masses, lam_masses, grid_per_unit)? {
            return Ok(v);
        }
    }
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for (i, g) in grids.iter().enumerate() {
        if let Some(g) = g {
            src.push(g.scaled(theta)?);
            dst.push(g.scaled(thetas[i])?);
        }
    }
    let src = WeightedMeasure::concat(&src)?;
    let dst = WeightedMeasure::concat(&dst)?;
    Ok(transport_cost(&src, &dst, p)?.cost)
}

fn lattice_leg(
    partition: &Partition,
    grids: &[Option<WeightedMeasure>],
    mu_masses: &[f64],
    lam_masses: &[f64],
    grid_per_unit: usize,
) -> Result<Option<f64>> {
    let integral = |x: f64| x.fract() == 0.0 && x.abs() < 1e15;
    if !mu_masses.iter().chain(lam_masses).all(|&x| integral(x)) {
        return Ok(None);
    }
    let parent = partition.parent();
    let d = parent.dim();
    let present: Vec<(usize, &WeightedMeasure)> = grids
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.as_ref().map(|g| (i, g)))
        .collect();
    let Some(&(_, first)) = present.first() else {
        return Ok(Some(0.0));
    };
    let count = first.len();
    if present.iter().any(|(_, g)| g.len() != count) || present.len() != partition.len() {
        return Ok(None);
    }
    let mut spacings = Vec::new();
    for &(i, _) in &present {
        for &side in partition.cells()[i].sides() {
            spacings.push(side / grid_resolution(side, grid_per_unit) as f64);
        }
    }
    let h = spacings[0];
    if spacings.iter().any(|&s| (s - h).abs() > 1e-12 * h) {
        return Ok(None);
    }
    let close = |x: f64| (x - x.round()).abs() < 1e-9;
    let mut sides = Vec::with_capacity(d);
    for a in 0..d {
        let n = parent.sides()[a] / h;
        if !close(n) {
            return Ok(None);
        }
        sides.push(n.round() as usize);
    }
    let n: usize = sides.iter().product();
    let m: f64 = mu_masses.iter().sum();
    let l: f64 = lam_masses.iter().sum();
    let mut supply = vec![0i64; n];
    for &(i, g) in &present {
        let s = l * mu_masses[i] - m * lam_masses[i];
        if s.abs() > 9e15 {
            return Ok(None);
        }
        for a in 0..g.len() {
            let x = g.point(a);
            let mut idx = 0usize;
            for ax in 0..d {
                let u = (x[ax] - parent.origin()[ax]) / h - 0.5;
                if !close(u) {
                    return Ok(None);
                }
                idx = idx * sides[ax] + u.round() as usize;
            }
            supply[idx] += s as i64;
        }
    }
    let scale = l * count as f64;
    Ok(Some(lattice_w1(&sides, &supply)? * h / scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_theta_in_three_dimensions() {
        let r = BoxRegion::cube(3, 8.0).unwrap();
        assert!((default_theta(&r) - 512f64.powf(-1.0 / 6.0)).abs() < 1e-15);
    }
}
