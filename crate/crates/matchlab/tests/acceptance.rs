//! One PASS/FAIL line per primary acceptance criterion.
//!
//! A FAIL line does not fail the target; only a criterion that cannot be
//! evaluated at all does. Positional arguments filter criteria by name.
//! `MATCHLAB_FULL_ACCEPTANCE=1` runs the grid defect at L = 32 with the
//! full replicate count.

use std::io::Write;
use std::time::Instant;

use matchlab::experiments::default_monotone_resolution;
use matchlab_core::pde_ansatz::{cz_bound_check, grid_defect_experiment};
use matchlab_core::point_process::{
    grid_measure, sample_poisson_pp, sample_uniform, BoxRegion, Partition, RngStream,
    WeightedMeasure,
};
use matchlab_core::statistics::{
    bipartite_fixed_n, depoissonize_compare, monotonicity_check, poisson_tail_bound, rate_fit,
    tail_check,
};
use matchlab_core::subadditivity::{c_elementary, subadd_decompose};
use matchlab_core::transport::{
    assignment_cost, brute_force_cost, transport_cost, transport_cost_1d,
};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 20_240_601;

fn stream(tag: u64) -> RngStream {
    RngStream::new(SEED, tag)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in 1..=3 {
        let cube = BoxRegion::cube(d, 1.0).map_err(err)?;
        for (k, p) in [1.0, 2.0, 3.5].into_iter().enumerate() {
            let setting = stream(1).child((d * 3 + k) as u64);
            for r in 0..200 {
                let s = setting.replicate(r);
                let n = 1 + (r as usize % 7);
                let x = sample_uniform(n, &cube, s.child(0));
                let y = sample_uniform(n, &cube, s.child(1));
                let fast = assignment_cost(&x, &y, p).map_err(err)?.cost;
                let brute = brute_force_cost(&x, &y, p).map_err(err)?;
                worst = worst.max(rel_err(fast, brute));
                count += 1;
            }
        }
    }
    let mut worst_1d: f64 = 0.0;
    let weights = BoxRegion::new(vec![0.1], vec![1.0]).map_err(err)?;
    let line = BoxRegion::cube(1, 1.0).map_err(err)?;
    for r in 0..200u64 {
        let s = stream(2).replicate(r);
        let p = [1.0, 2.0, 3.5][r as usize % 3];
        let measure = |tag: u64, n: usize| -> Result<WeightedMeasure, String> {
            let x = sample_uniform(n, &line, s.child(tag));
            let w = sample_uniform(n, &weights, s.child(tag + 10));
            let m =
                WeightedMeasure::new(1, x.coords().to_vec(), w.coords().to_vec()).map_err(err)?;
            m.scaled(1.0 / m.mass()).map_err(err)
        };
        let a = measure(0, 1 + (r as usize % 9))?;
        let b = measure(1, 1 + (r as usize * 7 % 11))?;
        let general = transport_cost(&a, &b, p).map_err(err)?.cost;
        let sorted = transport_cost_1d(&a, &b, p).map_err(err)?;
        worst_1d = worst_1d.max(rel_err(general, sorted));
    }
    Ok((
        worst <= 1e-9 && worst_1d <= 1e-9,
        format!(
            "{count} assignment instances, max relative error {worst:e}; 200 weighted 1D instances, max relative error {worst_1d:e}"
        ),
    ))
}

fn subadditivity_certificate() -> Outcome {
    let cube = BoxRegion::cube(3, 8.0).map_err(err)?;
    let part = Partition::regular(&cube, &[2, 2, 2]).map_err(err)?;
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    let mut total = 0;
    for (k, p) in [1.0, 2.0].into_iter().enumerate() {
        for (j, eps) in [0.1, 0.5].into_iter().enumerate() {
            let c = c_elementary(eps, p).map_err(err)?;
            let setting = stream(3).child((2 * k + j) as u64);
            for r in 0..100 {
                let s = setting.replicate(r);
                let mu = sample_poisson_pp(&cube, 1.0, s.child(0))
                    .map_err(err)?
                    .to_measure();
                let lambda = sample_poisson_pp(&cube, 1.0, s.child(1))
                    .map_err(err)?
                    .to_measure();
                let rep = subadd_decompose(&mu, &lambda, &part, p, eps).map_err(err)?;
                let rel = rep.inequality_slack / rep.rhs.abs().max(f64::MIN_POSITIVE);
                worst = worst.min(rel);
                total += 1;
                if rep.c_eps != c || rep.inequality_slack < -1e-9 * rep.rhs.abs() {
                    failures.push((p, eps, r));
                }
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{}/{total} instances hold, smallest slack/rhs {worst:e}, failures {failures:?}",
            total - failures.len()
        ),
    ))
}

fn slope_line(
    d: usize,
    p: f64,
    ns: &[usize],
    replicates: usize,
    target: f64,
    tol: f64,
    tag: u64,
) -> Result<(bool, String), String> {
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let rec =
            bipartite_fixed_n(n, d, p, replicates, stream(tag).child(k as u64)).map_err(err)?;
        means.push(rec.mean);
        ses.push(rec.stderr);
    }
    let scales: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = rate_fit(&scales, &means, &ses, d, p).map_err(err)?;
    let ok = (fit.slope - target).abs() <= tol;
    Ok((
        ok,
        format!(
            "d={d} p={p}: slope {:.4} ± {:.4} vs {target:.4} ± {tol}",
            fit.slope, fit.half_width
        ),
    ))
}

fn rates() -> Outcome {
    let ns: Vec<usize> = (6..=12).map(|k| 1 << k).collect();
    let (a, da) = slope_line(3, 1.0, &ns, 50, -1.0 / 3.0, 0.08, 4)?;
    let (b, db) = slope_line(1, 2.0, &ns, 50, -1.0, 0.1, 5)?;
    Ok((a && b, format!("{da}; {db}")))
}

fn two_dimensional_constant() -> Outcome {
    let n = 1024;
    let rec = bipartite_fixed_n(n, 2, 2.0, 100, stream(6)).map_err(err)?;
    let factor = n as f64 / (n as f64).ln();
    let value = factor * rec.mean;
    let se = factor * rec.stderr;
    Ok((
        (0.10..=0.25).contains(&value),
        format!("(n/log n)·E[W₂²/n] = {value:.4} ± {se:.4} at n = {n}, band [0.10, 0.25], limit 1/(2π) = {:.4}", 1.0 / std::f64::consts::TAU),
    ))
}

fn stabilization() -> Outcome {
    // same stream at both n: the n = 512 clouds are prefixes of the n = 2048 clouds
    let s = stream(7);
    let mut values = Vec::new();
    for n in [512usize, 2048] {
        let rec = bipartite_fixed_n(n, 3, 2.0, 100, s).map_err(err)?;
        let f = (n as f64).powf(2.0 / 3.0);
        values.push((f * rec.mean, f * rec.stderr));
    }
    let change = (values[1].0 / values[0].0 - 1.0).abs();
    let margins: Vec<f64> = values.iter().map(|(m, se)| m / se).collect();
    let ok = change < 0.10 && margins.iter().all(|&z| z > 10.0);
    Ok((
        ok,
        format!(
            "n^(2/3)·E[W₂²/n]: {:.4} ± {:.4} (n=512), {:.4} ± {:.4} (n=2048); change {:.2}%, margins {:.1}σ and {:.1}σ",
            values[0].0,
            values[0].1,
            values[1].0,
            values[1].1,
            100.0 * change,
            margins[0],
            margins[1]
        ),
    ))
}

fn pde_bound() -> Outcome {
    let threshold = 2.0 * (1.0 - 2f64.powf(-0.5)).powi(-2);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for d in [2usize, 3] {
        let l = 8.0;
        let cube = BoxRegion::cube(d, l).map_err(err)?;
        let res = vec![8; d];
        for r in 0..100 {
            let mu = sample_poisson_pp(&cube, 4.0, stream(8).child(d as u64).replicate(r))
                .map_err(err)?
                .to_measure();
            let lambda = grid_measure(&cube, &res, mu.mass()).map_err(err)?;
            let rep = cz_bound_check(&mu, &lambda, &cube, &res, 2.0).map_err(err)?;
            worst = worst.max(rep.pde_ratio);
            bad += usize::from(rep.pde_ratio > threshold);
        }
    }
    Ok((
        bad == 0,
        format!("200 instances (d = 2, 3), {bad} above {threshold:.3}, worst ratio {worst:.3}"),
    ))
}

fn grid_defect() -> Outcome {
    let full = std::env::var("MATCHLAB_FULL_ACCEPTANCE").is_ok_and(|v| v == "1");
    let plan = [
        (8usize, 200usize),
        (16, 200),
        (32, if full { 200 } else { 2 }),
    ];
    let mut means = Vec::new();
    let mut ses = Vec::new();
    let mut sandwich = true;
    let mut parts = Vec::new();
    for (k, &(l, reps)) in plan.iter().enumerate() {
        let est =
            grid_defect_experiment(l, 3, 1.0, reps, stream(9).child(k as u64)).map_err(err)?;
        sandwich &= est.sandwich_holds;
        parts.push(format!(
            "L={l}: {:.4} ± {:.4} ({reps} reps)",
            est.record.mean, est.record.stderr
        ));
        means.push(est.record.mean);
        ses.push(est.record.stderr);
    }
    let scales: Vec<f64> = plan.iter().map(|&(l, _)| l as f64).collect();
    let fit = rate_fit(&scales, &means, &ses, 3, 1.0).map_err(err)?;
    let slope_ok = (fit.slope + 0.5).abs() <= 0.2;
    let counts_ok = plan.iter().all(|&(_, reps)| reps >= 200);
    let mut detail = format!(
        "{}; sandwich {}; slope {:.3} ± {:.3} vs −0.5 ± 0.2",
        parts.join(", "),
        if sandwich { "holds" } else { "violated" },
        fit.slope,
        fit.half_width
    );
    if !counts_ok {
        detail.push_str(
            "; L=32 ran with a reduced replicate count (set MATCHLAB_FULL_ACCEPTANCE=1 for 200)",
        );
    }
    Ok((sandwich && slope_ok && counts_ok, detail))
}

fn cramer() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, n) in [100.0f64, 1000.0].into_iter().enumerate() {
        let ts: Vec<f64> = (1..=8).map(|j| j as f64 * n.sqrt() / 2.0).collect();
        let rep = tail_check(n, &ts, 100_000, stream(10).child(k as u64)).map_err(err)?;
        // the bound is recomputed here rather than read back from the report
        for (i, &t) in ts.iter().enumerate() {
            let bound = 2.0 * (-t * t / (2.0 * (t + n))).exp();
            if (bound - poisson_tail_bound(n, t)).abs() > 1e-12
                || rep.empirical_tail[i] > bound + 3.0 * rep.mc_sigma[i]
            {
                ok = false;
                lines.push(format!("n={n} t={t}: {} vs {bound}", rep.empirical_tail[i]));
            }
        }
    }
    let detail = if lines.is_empty() {
        "16 points, 10⁵ draws each, all within bound + 3σ".to_string()
    } else {
        lines.join("; ")
    };
    Ok((ok, detail))
}

fn depoissonization() -> Outcome {
    let mut gaps = Vec::new();
    let mut identity: f64 = 0.0;
    let mut logged = 0;
    for (k, l) in [6.0, 8.0, 10.0].into_iter().enumerate() {
        let rec =
            depoissonize_compare(l, 3, 2.0, 32, 2, stream(11).child(k as u64)).map_err(err)?;
        for s in &rec.samples {
            identity = identity.max(s.identity_error());
            logged += 1;
        }
        gaps.push((l, rec.gap.abs(), rec.joint_stderr));
    }
    let monotone = gaps
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + w[0].2.hypot(w[1].2));
    let shown: Vec<String> = gaps
        .iter()
        .map(|(l, g, se)| format!("L={l}: |gap| {g:.4} ± {se:.4}"))
        .collect();
    Ok((
        monotone && identity <= 1e-12,
        format!(
            "{}; identity max relative error {identity:e} over {logged} replicates",
            shown.join(", ")
        ),
    ))
}

fn monotonicity() -> Outcome {
    let ns = [8usize, 16, 32, 64];
    let res = default_monotone_resolution(64, 3);
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, p) in [1.0, 2.0].into_iter().enumerate() {
        let rep =
            monotonicity_check(&ns, 3, p, 200, res, stream(12).child(k as u64)).map_err(err)?;
        let z: Vec<String> = rep
            .differences
            .iter()
            .map(|d| format!("{:.1}", d.mean / d.stderr))
            .collect();
        let holds = rep.differences.iter().all(|d| d.mean <= 3.0 * d.stderr);
        ok &= holds;
        parts.push(format!("p={p}: difference z-scores [{}]", z.join(", ")));
    }
    Ok((ok, parts.join("; ")))
}

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let list = std::env::args().any(|a| a == "--list");
    let criteria: [Criterion; 10] = [
        ("oracle_equivalence", oracle_equivalence),
        ("subadditivity_certificate", subadditivity_certificate),
        ("rates", rates),
        ("two_dimensional_constant", two_dimensional_constant),
        ("stabilization", stabilization),
        ("pde_bound", pde_bound),
        ("grid_defect", grid_defect),
        ("cramer", cramer),
        ("depoissonization", depoissonization),
        ("monotonicity", monotonicity),
    ];
    let selected: Vec<_> = criteria
        .iter()
        .filter(|(name, _)| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str())))
        .collect();
    if list {
        for (name, _) in &selected {
            println!("{name}: test");
        }
        return;
    }
    let mut stdout = std::io::stdout();
    let mut unevaluated = Vec::new();
    for (name, check) in selected {
        let start = Instant::now();
        let line = match check() {
            Ok((passed, detail)) => {
                format!(
                    "{} {name}: {detail} [{:.1}s]",
                    if passed { "PASS" } else { "FAIL" },
                    start.elapsed().as_secs_f64()
                )
            }
            Err(e) => {
                unevaluated.push(*name);
                format!("ERROR {name}: {e}")
            }
        };
        writeln!(stdout, "{line}").unwrap();
        stdout.flush().unwrap();
    }
    if !unevaluated.is_empty() {
        panic!("criteria could not be evaluated: {unevaluated:?}");
    }
}
