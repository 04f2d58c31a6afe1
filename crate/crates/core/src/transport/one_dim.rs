use super::{check_masses, ground_cost_1d};
use crate::error::{invalid, Result};
use crate::point_process::WeightedMeasure;

/// Cost of the monotone (quantile) coupling between two measures on the line.
pub fn transport_cost_1d(
    source: &WeightedMeasure,
    target: &WeightedMeasure,
    p: f64,
) -> Result<f64> {
    if source.dim() != 1 || target.dim() != 1 {
        return invalid(format!(
            "one-dimensional transport needs dim 1, got {} and {}",
            source.dim(),
            target.dim()
        ));
    }
    super::check_exponent(p)?;
    if check_masses(source, target)? {
        return Ok(0.0);
    }
    let sorted = |m: &WeightedMeasure| {
        let mut atoms: Vec<(f64, f64)> =
            (0..m.len()).map(|i| (m.point(i)[0], m.weight(i))).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms
    };
    let a = sorted(source);
    let mut b = sorted(target);
    // absorb the admissible mass mismatch into the target
    let ratio = source.mass() / target.mass();
    for atom in &mut b {
        atom.1 *= ratio;
    }
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let m = ra.min(rb);
        cost += m * ground_cost_1d(a[i].0, b[j].0, p);
        ra -= m;
        rb -= m;
        if ra == 0.0 {
            i += 1;
            if i < a.len() {
                ra = a[i].1;
            }
        }
        if rb == 0.0 {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    Ok(cost)
}
