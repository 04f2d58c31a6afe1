//! Bipartite transport as integer min-cost flow, with column generation
//! for instances too large to hold every arc.

use std::collections::HashSet;

use super::network_simplex::{NetworkSimplex, SolveStatus};
use crate::error::{Error, Result};

/// Above this many source–sink pairs arcs are generated lazily.
pub const FULL_ARC_LIMIT: usize = 2_000_000;
const INITIAL_NEIGHBORS: usize = 8;
const ARCS_PER_SOURCE: usize = 6;
const MAX_ROUNDS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowArc {
    pub source: usize,
    pub sink: usize,
    pub flow: i64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    /// Arcs carrying positive flow.
    pub arcs: Vec<FlowArc>,
    /// `Σ flow · cost` in integer mass units.
    pub total: f64,
    pub pivots: u64,
    pub rounds: usize,
}

/// Min-cost transport from `supply` (sources) to `demand` (sinks), both
/// nonnegative with equal totals, under `cost(i, j)`.
pub fn solve_bipartite<C>(supply: &[i64], demand: &[i64], cost: C) -> Result<FlowSolution>
where
    C: Fn(usize, usize) -> f64,
{
    solve_bipartite_with_limit(supply, demand, cost, FULL_ARC_LIMIT)
}

/// As [`solve_bipartite`], switching to column generation above `full_arc_limit` pairs.
pub fn solve_bipartite_with_limit<C>(
    supply: &[i64],
    demand: &[i64],
    cost: C,
    full_arc_limit: usize,
) -> Result<FlowSolution>
where
    C: Fn(usize, usize) -> f64,
{
    let ns = supply.len();
    let nt = demand.len();
    let total_s: i64 = supply.iter().sum();
    let total_t: i64 = demand.iter().sum();
    if total_s != total_t {
        return Err(Error::Infeasible(format!(
            "integer supplies {total_s} and demands {total_t} differ"
        )));
    }
    if ns == 0 || nt == 0 || total_s == 0 {
        return Ok(FlowSolution {
            arcs: Vec::new(),
            total: 0.0,
            pivots: 0,
            rounds: 0,
        });
    }
    let mut nodes: Vec<i64> = supply.to_vec();
    nodes.extend(demand.iter().map(|d| -d));

    if ns.saturating_mul(nt) <= full_arc_limit {
        let mut costs = Vec::with_capacity(ns * nt);
        let mut max_cost = 0.0f64;
        for i in 0..ns {
            for j in 0..nt {
                let c = cost(i, j);
                max_cost = max_cost.max(c);
                costs.push(c);
            }
        }
        let mut simplex = NetworkSimplex::new(&nodes, artificial_cost(max_cost));
        simplex.reserve_arcs(ns * nt);
        for i in 0..ns {
            for j in 0..nt {
                simplex.add_arc(i, ns + j, costs[i * nt + j]);
            }
        }
        if simplex.solve() == SolveStatus::Unbounded {
            return Err(Error::Infeasible("flow problem is unbounded".into()));
        }
        return finish(&simplex, ns, 1);
    }

    // column generation: start from nearest neighbours in both directions
    let mut max_cost = 0.0f64;
    let mut present: HashSet<u64> = HashSet::new();
    let mut initial: Vec<(usize, usize, f64)> = Vec::new();
    let mut row: Vec<(f64, usize)> = Vec::with_capacity(nt.max(ns));
    let push = |i: usize,
                j: usize,
                c: f64,
                present: &mut HashSet<u64>,
                initial: &mut Vec<(usize, usize, f64)>| {
        if present.insert(key(i, j)) {
            initial.push((i, j, c));
        }
    };
    for i in 0..ns {
        row.clear();
        for j in 0..nt {
            let c = cost(i, j);
            max_cost = max_cost.max(c);
            row.push((c, j));
        }
        for (c, j) in smallest(&mut row, INITIAL_NEIGHBORS) {
            push(i, j, c, &mut present, &mut initial);
        }
    }
    for j in 0..nt {
        row.clear();
        for i in 0..ns {
            row.push((cost(i, j), i));
        }
        for (c, i) in smallest(&mut row, INITIAL_NEIGHBORS) {
            push(i, j, c, &mut present, &mut initial);
        }
    }
    let mut simplex = NetworkSimplex::new(&nodes, artificial_cost(max_cost));
    for (i, j, c) in initial {
        simplex.add_arc(i, ns + j, c);
    }
    let price_tol = 10.0 * simplex.tolerance();
    let mut rounds = 0;
    loop {
        rounds += 1;
        if simplex.solve() == SolveStatus::Unbounded {
            return Err(Error::Infeasible("flow problem is unbounded".into()));
        }
        simplex.refresh_potentials();
        if rounds > MAX_ROUNDS {
            return Err(Error::Infeasible(format!(
                "column generation did not converge in {MAX_ROUNDS} rounds"
            )));
        }
        let mut added = 0;
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(ARCS_PER_SOURCE + 1);
        for i in 0..ns {
            let pi_i = simplex.potential(i);
            best.clear();
            let mut worst_kept = -price_tol;
            for j in 0..nt {
                let rc = cost(i, j) + pi_i - simplex.potential(ns + j);
                if rc < worst_kept {
                    if present.contains(&key(i, j)) {
                        continue;
                    }
                    best.push((rc, j));
                    if best.len() > ARCS_PER_SOURCE {
                        let (pos, _) = best
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
                            .expect("nonempty");
                        best.swap_remove(pos);
                    }
                    if best.len() == ARCS_PER_SOURCE {
                        worst_kept = best.iter().map(|b| b.0).fold(f64::MIN, f64::max);
                    }
                }
            }
            for &(_, j) in &best {
                present.insert(key(i, j));
                simplex.add_arc(i, ns + j, cost(i, j));
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    finish(&simplex, ns, rounds)
}

fn key(i: usize, j: usize) -> u64 {
    ((i as u64) << 32) | j as u64
}

fn smallest(row: &mut [(f64, usize)], k: usize) -> Vec<(f64, usize)> {
    let k = k.min(row.len());
    if k < row.len() {
        row.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0));
    }
    row[..k].to_vec()
}

fn artificial_cost(max_cost: f64) -> f64 {
    if max_cost > 0.0 {
        3.0 * max_cost
    } else {
        1.0
    }
}

fn finish(simplex: &NetworkSimplex, ns: usize, rounds: usize) -> Result<FlowSolution> {
    let art = simplex.artificial_flow();
    if art != 0 {
        return Err(Error::Infeasible(format!(
            "{art} units left on artificial arcs"
        )));
    }
    let mut arcs = Vec::new();
    let mut total = 0.0;
    for e in simplex.real_arc_ids() {
        let f = simplex.flow(e);
        if f > 0 {
            let (u, v) = simplex.arc_endpoints(e);
            let c = simplex.arc_cost(e);
            total += f as f64 * c;
            arcs.push(FlowArc {
                source: u,
                sink: v - ns,
                flow: f,
                cost: c,
            });
        }
    }
    Ok(FlowSolution {
        arcs,
        total,
        pivots: simplex.pivots,
        rounds,
    })
}
