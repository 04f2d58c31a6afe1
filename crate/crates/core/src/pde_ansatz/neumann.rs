use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::GridField;
use crate::error::{invalid, Result};

/// Relative tolerance on `∫ rhs` for Neumann compatibility.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// Cell-centered Laplacian with zero flux through the outer faces: the
/// difference across a boundary face is taken as zero.
pub fn apply_neumann_laplacian(phi: &GridField) -> GridField {
    let mut out = vec![0.0; phi.len()];
    for axis in 0..phi.dim() {
        let n = phi.resolution[axis];
        let stride = phi.stride(axis);
        let inv_h2 = 1.0 / phi.spacing(axis).powi(2);
        for (c, o) in out.iter_mut().enumerate() {
            let i = (c / stride) % n;
            let v = phi.values[c];
            if i > 0 {
                *o += (phi.values[c - stride] - v) * inv_h2;
            }
            if i + 1 < n {
                *o += (phi.values[c + stride] - v) * inv_h2;
            }
        }
    }
    GridField {
        region: phi.region.clone(),
        resolution: phi.resolution.clone(),
        values: out,
    }
}

/// Orthonormal DCT-II matrix, row `k` is the `k`-th Neumann eigenvector.
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let s = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for i in 0..n {
            m[k * n + i] = s * (PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
        }
    }
    m
}

/// Applies `m` (or its transpose) along one axis of the flat array.
fn apply_along(values: &mut [f64], resolution: &[usize], axis: usize, m: &[f64], transpose: bool) {
    let n = resolution[axis];
    let stride: usize = resolution[axis + 1..].iter().product();
    let block = n * stride;
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    for start in (0..values.len()).step_by(block) {
        for offset in 0..stride {
            let base = start + offset;
            for (i, l) in line.iter_mut().enumerate() {
                *l = values[base + i * stride];
            }
            for (k, o) in out.iter_mut().enumerate() {
                *o = if transpose {
                    (0..n).map(|i| m[i * n + k] * line[i]).sum()
                } else {
                    (0..n).map(|i| m[k * n + i] * line[i]).sum()
                };
            }
            for (i, &o) in out.iter().enumerate() {
                values[base + i * stride] = o;
            }
        }
    }
}

/// Solves `Δ_h φ = rhs` with zero-flux boundary and `∫ φ = 0`, by expanding
/// in the cosine eigenbasis of the discrete operator (exact up to rounding
/// for every resolution).
pub fn solve_neumann_poisson(rhs: &GridField) -> Result<GridField> {
    let total = rhs.integral();
    let scale = rhs.abs_integral();
    if total.abs() > COMPATIBILITY_TOL * scale {
        return invalid(format!(
            "Neumann data must integrate to zero, got {total} (|rhs| integrates to {scale})"
        ));
    }
    let d = rhs.dim();
    let res = &rhs.resolution;
    let mats: Vec<Vec<f64>> = res.iter().map(|&n| dct_matrix(n)).collect();
    let mut coef = rhs.values.clone();
    for a in 0..d {
        apply_along(&mut coef, res, a, &mats[a], false);
    }
    let eig: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let h = rhs.spacing(a);
            let n = res[a];
            (0..n)
                .map(|k| -(2.0 - 2.0 * (PI * k as f64 / n as f64).cos()) / (h * h))
                .collect()
        })
        .collect();
    for (c, v) in coef.iter_mut().enumerate() {
        let mut rest = c;
        let mut lambda = 0.0;
        for a in (0..d).rev() {
            lambda += eig[a][rest % res[a]];
            rest /= res[a];
        }
        *v = if c == 0 { 0.0 } else { *v / lambda };
    }
    for a in 0..d {
        apply_along(&mut coef, res, a, &mats[a], true);
    }
    GridField::new(rhs.region.clone(), res.clone(), coef)
}

/// How the difference across an outer face enters [`grad_p_norm_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryRule {
    /// Zero flux: the outer face difference is 0.
    Neumann,
    /// Boundary cells use their interior face only.
    OneSided,
}

/// `∫ |∇φ|^p` under zero-flux boundary conditions, see [`grad_p_norm_with`].
pub fn grad_p_norm(phi: &GridField, p: f64) -> f64 {
    grad_p_norm_with(phi, p, BoundaryRule::Neumann)
}

/// Midpoint rule on face-centered differences: in each cell the squared
/// gradient component along an axis is the mean of the squared differences
/// on its two faces along that axis. At `p = 2` this is the discrete Dirichlet
/// energy `Σ_faces (Dφ)² · cell volume`.
pub fn grad_p_norm_with(phi: &GridField, p: f64, rule: BoundaryRule) -> f64 {
    let mut sq = vec![0.0; phi.len()];
    for axis in 0..phi.dim() {
        let n = phi.resolution[axis];
        let stride = phi.stride(axis);
        let h = phi.spacing(axis);
        for (c, s) in sq.iter_mut().enumerate() {
            let i = (c / stride) % n;
            let lo = (i > 0).then(|| ((phi.values[c] - phi.values[c - stride]) / h).powi(2));
            let hi = (i + 1 < n).then(|| ((phi.values[c + stride] - phi.values[c]) / h).powi(2));
            *s += match (lo, hi, rule) {
                (Some(a), Some(b), _) => 0.5 * (a + b),
                (Some(a), None, BoundaryRule::Neumann) | (None, Some(a), BoundaryRule::Neumann) => {
                    0.5 * a
                }
                (Some(a), None, BoundaryRule::OneSided)
                | (None, Some(a), BoundaryRule::OneSided) => a,
                (None, None, _) => 0.0,
            };
        }
    }
    sq.iter().map(|s| s.powf(p / 2.0)).sum::<f64>() * phi.cell_volume()
}
