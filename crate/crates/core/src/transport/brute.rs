use super::{check_exponent, ground_cost};
use crate::error::{invalid, Result};
use crate::point_process::PointCloud;

pub const BRUTE_FORCE_MAX: usize = 8;

/// Minimum of `Σ |X_i − Y_σ(i)|^p` over all permutations (Heap's algorithm).
pub fn brute_force_cost(x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if x.len() != y.len() {
        return invalid(format!(
            "brute force needs equal sizes, got {} and {}",
            x.len(),
            y.len()
        ));
    }
    if x.dim() != y.dim() {
        return invalid("dimension mismatch");
    }
    let n = x.len();
    if n > BRUTE_FORCE_MAX {
        return invalid(format!(
            "brute force is limited to n <= {BRUTE_FORCE_MAX}, got {n}"
        ));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let c: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| ground_cost(x.point(i), y.point(j), p))
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let eval = |perm: &[usize]| {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| c[i * n + j])
            .sum::<f64>()
    };
    let mut best = eval(&perm);
    let mut counters = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.min(eval(&perm));
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}
