//! Exact `W_1` between integer-weighted measures on a box of the integer
//! lattice.
//!
//! For `p = 1` mass may be routed through intermediate sites, so the problem
//! is a transshipment on the lattice: unit-stencil arcs between neighbours
//! (all offsets in `{-1, 0, 1}^d`) plus direct surplus-to-deficit arcs priced
//! in by column generation. Every arc costs the Euclidean length of its
//! displacement, so no route is cheaper than the straight line and the
//! optimum equals the bipartite transport cost.

use std::collections::HashSet;

use super::network_simplex::{NetworkSimplex, SolveStatus};
use crate::error::{invalid, Error, Result};

const ARCS_PER_SOURCE: usize = 20;
const PRICE_TOL: f64 = 1e-9;
const MAX_ROUNDS: usize = 1000;

/// Sites are indexed row-major (last axis fastest); `supply[x] > 0` marks
/// surplus. Returns `Σ flow · |x − y|` in the units of `supply`.
pub fn lattice_w1(sides: &[usize], supply: &[i64]) -> Result<f64> {
    let d = sides.len();
    if d == 0 || sides.iter().any(|&s| s == 0) {
        return invalid("lattice needs at least one site per axis");
    }
    let n: usize = sides.iter().product();
    if supply.len() != n {
        return invalid(format!("expected {n} supplies, got {}", supply.len()));
    }
    let net: i64 = supply.iter().sum();
    if net != 0 {
        return Err(Error::Infeasible(format!(
            "supplies sum to {net}, not zero"
        )));
    }
    if supply.iter().all(|&s| s == 0) {
        return Ok(0.0);
    }

    let coords = |mut i: usize| {
        let mut x = vec![0i64; d];
        for k in (0..d).rev() {
            x[k] = (i % sides[k]) as i64;
            i /= sides[k];
        }
        x
    };
    let index = |x: &[i64]| {
        x.iter()
            .zip(sides)
            .fold(0usize, |acc, (&c, &s)| acc * s + c as usize)
    };

    let stencil: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let c = (code % 3) as i64 - 1;
                    code /= 3;
                    c
                })
                .collect::<Vec<i64>>()
        })
        .filter(|v| v.iter().any(|&c| c != 0))
        .collect();
    let longest = sides
        .iter()
        .map(|&s| (s as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut ns = NetworkSimplex::new(supply, 2.0 * (longest * (d as f64).sqrt() + 1.0));
    ns.reserve_arcs(n * stencil.len());
    let mut y = vec![0i64; d];
    for i in 0..n {
        let x = coords(i);
        for v in &stencil {
            let mut inside = true;
            for k in 0..d {
                y[k] = x[k] + v[k];
                inside &= y[k] >= 0 && y[k] < sides[k] as i64;
            }
            if inside {
                let len = (v.iter().map(|c| c * c).sum::<i64>() as f64).sqrt();
                ns.add_arc(i, index(&y), len);
            }
        }
    }

    let sources: Vec<usize> = (0..n).filter(|&i| supply[i] > 0).collect();
    let sinks: Vec<usize> = (0..n).filter(|&i| supply[i] < 0).collect();
    let sink_coords: Vec<f64> = sinks
        .iter()
        .flat_map(|&j| coords(j).into_iter().map(|c| c as f64))
        .collect();
    let mut sink_pi = vec![0.0; sinks.len()];
    let mut present: HashSet<(u32, u32)> = HashSet::new();
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(ARCS_PER_SOURCE + 1);
    let mut rounds = 0;
    loop {
        rounds += 1;
        if ns.solve() == SolveStatus::Unbounded {
            return Err(Error::Infeasible(
                "lattice flow problem is unbounded".into(),
            ));
        }
        ns.refresh_potentials();
        if rounds > MAX_ROUNDS {
            return Err(Error::Infeasible(format!(
                "column generation did not converge in {MAX_ROUNDS} rounds"
            )));
        }
        for (k, &j) in sinks.iter().enumerate() {
            sink_pi[k] = ns.potential(j);
        }
        let mut added = 0;
        for &i in &sources {
            let xi: Vec<f64> = coords(i).into_iter().map(|c| c as f64).collect();
            let pi_i = ns.potential(i) + PRICE_TOL;
            best.clear();
            let mut worst = 0.0f64;
            for (k, &pj) in sink_pi.iter().enumerate() {
                let gain = pj - pi_i;
                if gain <= 0.0 {
                    continue;
                }
                let yk = &sink_coords[k * d..(k + 1) * d];
                let d2: f64 = xi.iter().zip(yk).map(|(a, b)| (a - b) * (a - b)).sum();
                if gain * gain <= d2 {
                    continue;
                }
                // reduced cost |x − y| + π(x) − π(y), negative here
                let rc = d2.sqrt() - gain;
                if best.len() == ARCS_PER_SOURCE && rc >= worst {
                    continue;
                }
                if present.contains(&(i as u32, sinks[k] as u32)) {
                    continue;
                }
                best.push((rc, k));
                if best.len() > ARCS_PER_SOURCE {
                    let (pos, _) = best
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                        .expect("nonempty");
                    best.swap_remove(pos);
                }
                if best.len() == ARCS_PER_SOURCE {
                    worst = best.iter().map(|b| b.0).fold(f64::MIN, f64::max);
                }
            }
            for &(_, k) in &best {
                let j = sinks[k];
                present.insert((i as u32, j as u32));
                let yk = &sink_coords[k * d..(k + 1) * d];
                let len = xi
                    .iter()
                    .zip(yk)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                ns.add_arc(i, j, len);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    let art = ns.artificial_flow();
    if art != 0 {
        return Err(Error::Infeasible(format!(
            "{art} units left on artificial arcs"
        )));
    }
    Ok(ns
        .real_arc_ids()
        .map(|e| ns.flow(e) as f64 * ns.arc_cost(e))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_shift() {
        // unit mass at 0 and 1 moved to 3 and 4
        let w = lattice_w1(&[5], &[1, 1, 0, -1, -1]).unwrap();
        assert!((w - 6.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_move_in_the_plane() {
        let mut s = vec![0i64; 9];
        s[0] = 2;
        s[8] = -2;
        let w = lattice_w1(&[3, 3], &s).unwrap();
        assert!((w - 2.0 * 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn knight_move_needs_a_direct_arc() {
        let mut s = vec![0i64; 6];
        // (0,0) -> (1,2) in a 2×3 box
        s[0] = 1;
        s[5] = -1;
        let w = lattice_w1(&[2, 3], &s).unwrap();
        assert!((w - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_unbalanced_supply() {
        assert!(lattice_w1(&[2], &[1, 0]).is_err());
    }
}
