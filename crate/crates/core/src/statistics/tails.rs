use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimate::run_replicates;
use crate::point_process::{poisson_count, RngStream};

/// Draws per parallel chunk; chunk `c` uses `stream.replicate(c)`.
const CHUNK: usize = 10_000;

/// Cramér–Chernoff bound `P[|N − n| ≥ t] ≤ 2 exp(−t² / (2(t + n)))` for
/// `N ~ Poisson(n)`.
pub fn poisson_tail_bound(n: f64, t: f64) -> f64 {
    2.0 * (-t * t / (2.0 * (t + n))).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: f64,
    pub draws: usize,
    pub thresholds: Vec<f64>,
    /// Fraction of draws with `|N − n| ≥ t`.
    pub empirical_tail: Vec<f64>,
    pub bound: Vec<f64>,
    /// `√(q(1 − q)/draws)` at the empirical frequency `q`.
    pub mc_sigma: Vec<f64>,
}

impl TailReport {
    /// Empirical tail at most `bound + 3σ` at every threshold.
    pub fn holds(&self) -> bool {
        self.violations().is_empty()
    }

    /// Indices of thresholds where the empirical tail exceeds `bound + 3σ`.
    pub fn violations(&self) -> Vec<usize> {
        (0..self.thresholds.len())
            .filter(|&i| self.empirical_tail[i] > self.bound[i] + 3.0 * self.mc_sigma[i])
            .collect()
    }
}

/// Eight thresholds `t = √n/2, √n, …, 4√n`.
pub fn default_thresholds(n: f64) -> Vec<f64> {
    (1..=8).map(|k| 0.5 * k as f64 * n.sqrt()).collect()
}

fn poisson_draws(n: f64, draws: usize, stream: RngStream) -> Vec<u64> {
    let chunks = draws.div_ceil(CHUNK);
    run_replicates(chunks, |c| {
        let mut rng = stream.replicate(c).rng();
        let len = CHUNK.min(draws - c as usize * CHUNK);
        (0..len)
            .map(|_| poisson_count(n, &mut rng))
            .collect::<Vec<_>>()
    })
    .concat()
}

/// Monte Carlo tail frequencies of `Poisson(n)` against [`poisson_tail_bound`].
pub fn tail_check(
    n: f64,
    thresholds: &[f64],
    draws: usize,
    stream: RngStream,
) -> Result<TailReport> {
    if !(n.is_finite() && n > 0.0) {
        return invalid(format!("Poisson parameter must be positive, got {n}"));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return invalid("thresholds must be a nonempty list of positive numbers");
    }
    if draws == 0 {
        return invalid("need at least one draw");
    }
    let samples = poisson_draws(n, draws, stream);
    let mut empirical_tail = Vec::with_capacity(thresholds.len());
    let mut mc_sigma = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let hits = samples
            .iter()
            .filter(|&&k| (k as f64 - n).abs() >= t)
            .count();
        let q = hits as f64 / draws as f64;
        empirical_tail.push(q);
        mc_sigma.push((q * (1.0 - q) / draws as f64).sqrt());
    }
    Ok(TailReport {
        n,
        draws,
        thresholds: thresholds.to_vec(),
        empirical_tail,
        bound: thresholds
            .iter()
            .map(|&t| poisson_tail_bound(n, t))
            .collect(),
        mc_sigma,
    })
}

/// Empirical `E|N − n|^q / n^{q/2}` for `N ~ Poisson(n)`.
pub fn moment_ratio(n: f64, q: f64, samples: usize, stream: RngStream) -> Result<f64> {
    if !(n.is_finite() && n > 0.0) {
        return invalid(format!("Poisson parameter must be positive, got {n}"));
    }
    if !(q.is_finite() && q >= 1.0) {
        return invalid(format!("moment order must be at least 1, got {q}"));
    }
    if samples < 1000 {
        return invalid(format!("need at least 1000 samples, got {samples}"));
    }
    let draws = poisson_draws(n, samples, stream);
    let moment = draws
        .iter()
        .map(|&k| (k as f64 - n).abs().powf(q))
        .sum::<f64>()
        / samples as f64;
    Ok(moment / n.powf(q / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub q: f64,
    pub ns: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Twice the ratio at the smallest `n`.
    pub constant: f64,
    pub holds: bool,
}

/// [`moment_ratio`] along `ns`, checked against twice its value at the
/// smallest `n`. Each `n` gets its own child stream.
pub fn moment_boundedness(
    ns: &[f64],
    q: f64,
    samples: usize,
    stream: RngStream,
) -> Result<MomentReport> {
    if ns.is_empty() {
        return invalid("need at least one Poisson parameter");
    }
    let ratios = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| moment_ratio(n, q, samples, stream.child(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let smallest = (0..ns.len())
        .min_by(|&a, &b| ns[a].total_cmp(&ns[b]))
        .unwrap_or(0);
    let constant = 2.0 * ratios[smallest];
    Ok(MomentReport {
        q,
        ns: ns.to_vec(),
        holds: ratios.iter().all(|&r| r <= constant),
        ratios,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_draws_cover_the_request() {
        let s = RngStream::new(1, 0);
        assert_eq!(poisson_draws(5.0, 25_001, s).len(), 25_001);
        assert_eq!(poisson_draws(5.0, 3, s), poisson_draws(5.0, 3, s));
    }
}
