use serde::{Deserialize, Serialize};

use super::constants::c_elementary;
use crate::error::{invalid, Error, Result};
use crate::point_process::{Partition, WeightedMeasure};
use crate::transport::{transport_cost, transport_cost_integral, IntegerMasses};

/// The three transport terms of the sub-additivity inequality
/// `lhs ≤ (1 + ε)·parts_sum + C(ε, p)·coarse_defect` on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    /// `W^p(μ, κλ)` on the parent region.
    pub lhs: f64,
    /// `Σ_i W^p(μ_i, κ_i λ_i)` over the cells.
    pub parts_sum: f64,
    /// `W^p(Σ_i κ_i χ_i λ, κλ)`.
    pub coarse_defect: f64,
    pub epsilon: f64,
    pub c_eps: f64,
    pub rhs: f64,
    pub inequality_slack: f64,
    pub p: f64,
    pub kappa: f64,
    /// Per-cell ratios `μ(Ω_i)/λ(Ω_i)`; zero on cells without `μ` mass.
    pub kappas: Vec<f64>,
    /// Whether the coarse term used an exact common denominator.
    pub exact_masses: bool,
}

impl DefectReport {
    pub fn holds(&self) -> bool {
        self.inequality_slack >= -1e-9 * self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// A measure split along the cells of a partition; atoms outside the parent
/// are dropped.
pub(crate) struct Split {
    pub cells: Vec<WeightedMeasure>,
    pub masses: Vec<f64>,
}

pub(crate) fn split(measure: &WeightedMeasure, partition: &Partition) -> Split {
    let k = partition.len();
    let dim = measure.dim();
    let mut coords: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut weights: Vec<Vec<f64>> = vec![Vec::new(); k];
    for a in 0..measure.len() {
        let x = measure.point(a);
        if let Some(c) = partition.locate(x) {
            coords[c].extend_from_slice(x);
            weights[c].push(measure.weight(a));
        }
    }
    let cells: Vec<WeightedMeasure> = coords
        .into_iter()
        .zip(weights)
        .map(|(c, w)| WeightedMeasure::new(dim, c, w).expect("atoms of a valid measure"))
        .collect();
    let masses = cells.iter().map(|m| m.mass()).collect();
    Split { cells, masses }
}

/// Computes every term of the sub-additivity inequality exactly and its slack.
pub fn subadd_decompose(
    mu: &WeightedMeasure,
    lambda: &WeightedMeasure,
    partition: &Partition,
    p: f64,
    epsilon: f64,
) -> Result<DefectReport> {
    let c_eps = c_elementary(epsilon, p)?;
    if mu.dim() != lambda.dim() || mu.dim() != partition.parent().dim() {
        return invalid("dimension mismatch between measures and partition");
    }
    if !partition.is_admissible() {
        return invalid("partition is not admissible");
    }
    let mus = split(mu, partition);
    let lams = split(lambda, partition);
    let m_total: f64 = mus.masses.iter().sum();
    let l_total: f64 = lams.masses.iter().sum();

    let mut kappas = vec![0.0; partition.len()];
    for i in 0..partition.len() {
        if mus.masses[i] > 0.0 {
            if lams.masses[i] <= 0.0 {
                return Err(Error::InfeasibleCell {
                    cell: i,
                    mu_mass: mus.masses[i],
                });
            }
            kappas[i] = mus.masses[i] / lams.masses[i];
        }
    }
    let kappa = if l_total > 0.0 {
        m_total / l_total
    } else {
        0.0
    };
    let mu_r = WeightedMeasure::concat(&mus.cells)?;
    let lam_r = WeightedMeasure::concat(&lams.cells)?;

    let lhs = if m_total > 0.0 {
        transport_cost(&mu_r, &lam_r.scaled(kappa)?, p)?.cost
    } else {
        0.0
    };

    let mut parts_sum = 0.0;
    for i in 0..partition.len() {
        if kappas[i] > 0.0 {
            parts_sum += transport_cost(&mus.cells[i], &lams.cells[i].scaled(kappas[i])?, p)?.cost;
        }
    }

    let (coarse_defect, exact_masses) = coarse_defect(&lams, &mus.masses, p)?;

    let rhs = (1.0 + epsilon) * parts_sum + c_eps * coarse_defect;
    Ok(DefectReport {
        lhs,
        parts_sum,
        coarse_defect,
        epsilon,
        c_eps,
        rhs,
        inequality_slack: rhs - lhs,
        p,
        kappa,
        kappas,
        exact_masses,
    })
}

/// `W^p(Σ_i κ_i χ_i λ, κλ)` with `κ_i = μ(Ω_i)/λ(Ω_i)`; the flag tells
/// whether the masses were represented exactly.
///
/// Both measures live on the atoms of `λ`. When all weights and cell masses
/// are integers, `D = lcm(λ(Ω_i), λ(R))` makes `κ_i w_a D` and `κ w_a D`
/// integers. For `p = 1` only the signed difference per atom matters, so the
/// common part is cancelled before solving.
pub(crate) fn coarse_defect(lams: &Split, mu_masses: &[f64], p: f64) -> Result<(f64, bool)> {
    let m_total: f64 = mu_masses.iter().sum();
    let l_total: f64 = lams.masses.iter().sum();
    if m_total <= 0.0 {
        return Ok((0.0, true));
    }
    let dim = lams.cells[0].dim();
    let lam = WeightedMeasure::concat(&lams.cells)?;
    let (src, dst, scale, exact) = match rational_pairs(lams, mu_masses, m_total, l_total) {
        Some((s, t, den)) => (s, t, den, true),
        None => {
            let kappa = m_total / l_total;
            let mut s = Vec::with_capacity(lam.len());
            for (i, cell) in lams.cells.iter().enumerate() {
                let k_i = if mu_masses[i] > 0.0 {
                    mu_masses[i] / lams.masses[i]
                } else {
                    0.0
                };
                s.extend(cell.weights().iter().map(|w| k_i * w));
            }
            let t: Vec<f64> = lam.weights().iter().map(|w| kappa * w).collect();
            return generic(&lam, &s, &t, p).map(|c| (c, false));
        }
    };
    let (s, t): (Vec<i64>, Vec<i64>) = if p == 1.0 {
        src.iter()
            .zip(&dst)
            .map(|(&a, &b)| ((a - b).max(0), (b - a).max(0)))
            .unzip()
    } else {
        (src, dst)
    };
    let pick = |w: &[i64]| {
        let mut coords = Vec::new();
        let mut ints = Vec::new();
        for (a, &x) in w.iter().enumerate() {
            if x > 0 {
                coords.extend_from_slice(lam.point(a));
                ints.push(x);
            }
        }
        let weights = ints.iter().map(|&x| x as f64 / scale).collect();
        (WeightedMeasure::new(dim, coords, weights), ints)
    };
    let (source, supply) = pick(&s);
    let (target, demand) = pick(&t);
    if supply.is_empty() {
        return Ok((0.0, exact));
    }
    let masses = IntegerMasses {
        supply,
        demand,
        scale,
    };
    Ok((
        transport_cost_integral(&source?, &target?, &masses, p)?.cost,
        exact,
    ))
}

fn generic(lam: &WeightedMeasure, s: &[f64], t: &[f64], p: f64) -> Result<f64> {
    let keep = |w: &[f64]| {
        let mut coords = Vec::new();
        let mut ws = Vec::new();
        for (a, &x) in w.iter().enumerate() {
            if x > 0.0 {
                coords.extend_from_slice(lam.point(a));
                ws.push(x);
            }
        }
        WeightedMeasure::new(lam.dim(), coords, ws)
    };
    Ok(transport_cost(&keep(s)?, &keep(t)?, p)?.cost)
}

/// Per-atom integers `κ_i w_a D` and `κ w_a D` with the common denominator
/// `D`, or `None` when the weights are not integral or `D` overflows.
fn rational_pairs(
    lams: &Split,
    mu_masses: &[f64],
    m_total: f64,
    l_total: f64,
) -> Option<(Vec<i64>, Vec<i64>, f64)> {
    const LIMIT: i128 = 1 << 62;
    let as_int = |x: f64| (x.fract() == 0.0 && x >= 0.0 && x < 9e15).then_some(x as i128);
    let l_tot = as_int(l_total)?;
    let m_tot = as_int(m_total)?;
    let mut den = l_tot;
    for (i, cell) in lams.cells.iter().enumerate() {
        if mu_masses[i] > 0.0 {
            den = lcm(den, as_int(lams.masses[i])?)?;
            if den > LIMIT {
                return None;
            }
        }
        if cell.weights().iter().any(|&w| as_int(w).is_none()) {
            return None;
        }
    }
    let mut src = Vec::new();
    let mut dst = Vec::new();
    let mut total: i128 = 0;
    for (i, cell) in lams.cells.iter().enumerate() {
        let m_i = as_int(mu_masses[i])?;
        for &w in cell.weights() {
            let w = w as i128;
            let s = if m_i > 0 {
                m_i.checked_mul(w)?
                    .checked_mul(den / as_int(lams.masses[i])?)?
            } else {
                0
            };
            let t = m_tot.checked_mul(w)?.checked_mul(den / l_tot)?;
            total = total.checked_add(t)?;
            src.push(i64::try_from(s).ok()?);
            dst.push(i64::try_from(t).ok()?);
        }
    }
    (total <= LIMIT).then_some((src, dst, den as f64))
}

fn lcm(a: i128, b: i128) -> Option<i128> {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    (a / x).checked_mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::BoxRegion;

    fn unit_atoms(xs: &[f64]) -> WeightedMeasure {
        WeightedMeasure::new(1, xs.to_vec(), vec![1.0; xs.len()]).unwrap()
    }

    #[test]
    fn hand_computed_line() {
        // μ: two atoms left, none right; λ: one atom each side
        let parent = BoxRegion::cube(1, 2.0).unwrap();
        let part = Partition::regular(&parent, &[2]).unwrap();
        let mu = unit_atoms(&[0.2, 0.4]);
        let lambda = unit_atoms(&[0.5, 1.5]);
        let r = subadd_decompose(&mu, &lambda, &part, 1.0, 0.5).unwrap();
        assert_eq!(r.kappas, vec![2.0, 0.0]);
        assert_eq!(r.kappa, 1.0);
        // lhs: {0.2, 0.4} → {0.5, 1.5}, both matchings cost 1.4
        assert!((r.lhs - 1.4).abs() < 1e-12);
        // parts: both to 0.5 with weight 2: 0.3 + 0.1
        assert!((r.parts_sum - 0.4).abs() < 1e-12);
        // coarse: mass 2 at 0.5 against 1 at 0.5 and 1 at 1.5
        assert!((r.coarse_defect - 1.0).abs() < 1e-12);
        assert!(r.exact_masses);
        assert!(r.holds());
    }

    #[test]
    fn empty_reference_cell_is_reported() {
        let parent = BoxRegion::cube(1, 2.0).unwrap();
        let part = Partition::regular(&parent, &[2]).unwrap();
        let err = subadd_decompose(&unit_atoms(&[1.5]), &unit_atoms(&[0.5]), &part, 1.0, 0.5)
            .unwrap_err();
        assert_eq!(
            err,
            Error::InfeasibleCell {
                cell: 1,
                mu_mass: 1.0
            }
        );
    }

    #[test]
    fn lcm_overflow_is_none() {
        assert_eq!(lcm(6, 4), Some(12));
        assert_eq!(lcm(i128::MAX, 2), None);
    }
}
