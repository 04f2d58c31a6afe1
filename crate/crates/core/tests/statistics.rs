use matchlab_core::point_process::{
    grid_measure, sample_uniform, BoxRegion, RngStream, WeightedMeasure,
};
use matchlab_core::statistics::*;
use matchlab_core::transport::transport_cost;
use matchlab_core::Error;

#[test]
fn tail_bound_values() {
    assert!((poisson_tail_bound(100.0, 1e-9) - 2.0).abs() < 1e-15);
    assert!((poisson_tail_bound(100.0, 10.0) - 2.0 * (-100.0f64 / 220.0).exp()).abs() < 1e-15);
    assert!((poisson_tail_bound(100.0, 10.0) - 1.2690).abs() < 1e-3);
    assert!((poisson_tail_bound(100.0, 40.0) - 0.00659).abs() < 1e-5);
}

#[test]
fn empirical_tail_below_bound_far_out() {
    let rep = tail_check(100.0, &[40.0], 1_000_000, RngStream::new(1, 0)).unwrap();
    assert!(rep.empirical_tail[0] <= rep.bound[0], "{rep:?}");
    assert!(rep.holds());
}

#[test]
fn tail_frequencies_match_exact_poisson_probabilities() {
    // P[|N − 4| ≥ 3] = P[N ≤ 1] + P[N ≥ 7] for N ~ Poisson(4), summed directly
    let pmf =
        |k: u32| (-4.0f64).exp() * 4f64.powi(k as i32) / (1..=k).map(f64::from).product::<f64>();
    let exact = pmf(0) + pmf(1) + 1.0 - (0..7).map(pmf).sum::<f64>();
    let rep = tail_check(4.0, &[3.0], 200_000, RngStream::new(2, 0)).unwrap();
    assert!(
        (rep.empirical_tail[0] - exact).abs() < 4.0 * rep.mc_sigma[0],
        "{} vs {exact}",
        rep.empirical_tail[0]
    );
}

#[test]
fn tail_report_is_well_formed() {
    let ts = default_thresholds(100.0);
    assert_eq!(ts.len(), 8);
    let rep = tail_check(100.0, &ts, 10_000, RngStream::new(3, 0)).unwrap();
    assert!(rep.empirical_tail.iter().all(|q| (0.0..=1.0).contains(q)));
    assert!(rep.empirical_tail.windows(2).all(|w| w[1] <= w[0]));
    assert!(tail_check(0.0, &ts, 10, RngStream::new(3, 0)).is_err());
}

#[test]
fn second_moment_ratio_is_one() {
    let r = moment_ratio(1000.0, 2.0, 200_000, RngStream::new(4, 0)).unwrap();
    // Var(N)/n = 1; relative stderr of the sample variance is about √(2/draws)
    assert!((r - 1.0).abs() < 4.0 * (2.0f64 / 200_000.0).sqrt(), "{r}");
}

#[test]
fn first_moment_ratio_tends_to_normal_mean_deviation() {
    let r = moment_ratio(10_000.0, 1.0, 200_000, RngStream::new(5, 0)).unwrap();
    let target = (2.0 / std::f64::consts::PI).sqrt();
    // sd of |Z| is √(1 − 2/π) ≈ 0.6
    assert!(
        (r - target).abs() < 4.0 * 0.61 / 200_000f64.sqrt() + 0.005,
        "{r} vs {target}"
    );
}

#[test]
fn fourth_moment_ratio_is_bounded() {
    let rep = moment_boundedness(&[100.0, 10_000.0], 4.0, 100_000, RngStream::new(6, 0)).unwrap();
    assert!(rep.holds);
    let q = rep.ratios[1] / rep.ratios[0];
    assert!(q > 1.0 / 1.5 && q < 1.5, "{rep:?}");
    assert!(moment_ratio(10.0, 2.0, 999, RngStream::new(6, 0)).is_err());
}

#[test]
fn dilation_scales_cost_by_l_to_the_p() {
    let unit = BoxRegion::cube(3, 1.0).unwrap();
    let x = sample_uniform(20, &unit, RngStream::new(7, 0)).to_measure();
    let grid = grid_measure(&unit, &[4, 4, 4], 20.0).unwrap();
    for (l, p) in [(6.0, 2.0), (2.5, 1.0), (3.0, 1.5)] {
        let a = transport_cost(&x, &grid, p).unwrap().cost;
        let b = transport_cost(&x.dilated(l), &grid.dilated(l), p)
            .unwrap()
            .cost;
        assert!((b / a - f64::powf(l, p)).abs() < 1e-12 * f64::powf(l, p));
    }
}

#[test]
fn depoisson_identity_reconstructs_conditional_costs() {
    let rec = depoissonize_compare(2.0, 3, 2.0, 6, 2, RngStream::new(8, 0)).unwrap();
    assert_eq!(rec.n_fixed, 8);
    assert_eq!(rec.samples.len(), 6);
    assert!(
        rec.identity_max_error <= 1e-12,
        "{}",
        rec.identity_max_error
    );
    let means = (rec.poisson_estimate.mean, rec.fixed_estimate.mean);
    assert!((rec.gap - (means.0 - means.1).abs()).abs() < 1e-12);
    assert!(depoissonize_compare(1.1, 1, 2.0, 6, 2, RngStream::new(8, 0)).is_err());
}

#[test]
fn depoisson_arms_share_points_when_counts_agree() {
    let rec = depoissonize_compare(2.0, 2, 2.0, 40, 3, RngStream::new(9, 0)).unwrap();
    let same: Vec<_> = rec
        .samples
        .iter()
        .filter(|s| s.count == rec.n_fixed)
        .collect();
    assert!(!same.is_empty());
    for s in same {
        // with N = n the fixed arm is the conditional value at L = n^{1/d}
        assert!((s.fixed_value - s.conditional_value).abs() <= 1e-12 * s.fixed_value);
    }
}

#[test]
fn equal_n_gives_equal_estimates() {
    let rep = monotonicity_check(&[6, 6], 2, 1.0, 4, 6, RngStream::new(10, 0)).unwrap();
    assert_eq!(rep.estimates[0].mean, rep.estimates[1].mean);
    assert_eq!(rep.differences[0].mean, 0.0);
    assert!(rep.holds);
}

#[test]
fn f_one_decreases_from_four_to_eight_points() {
    let rep = monotonicity_check(&[4, 8], 3, 1.0, 60, 8, RngStream::new(11, 0)).unwrap();
    assert!(rep.holds, "{:?}", rep.differences);
    assert!(rep.estimates[1].mean < rep.estimates[0].mean);
}

#[test]
fn averaging_over_subsets_bounds_the_full_cost() {
    // W^p(n⁻¹Σδ, ν) ≤ average over m-subsets of W^p(m⁻¹Σ_I δ, ν), checked exactly
    // for n = 4, m = 2 against a small grid
    let unit = BoxRegion::cube(2, 1.0).unwrap();
    let grid = grid_measure(&unit, &[3, 3], 1.0).unwrap();
    let pts = sample_uniform(4, &unit, RngStream::new(12, 0));
    let full = WeightedMeasure::uniform_weights(2, pts.coords().to_vec(), 0.25).unwrap();
    let whole = transport_cost(&full, &grid, 2.0).unwrap().cost;
    let mut avg = 0.0;
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (a, b) in pairs {
        let coords = [pts.point(a), pts.point(b)].concat();
        let sub = WeightedMeasure::uniform_weights(2, coords, 0.5).unwrap();
        avg += transport_cost(&sub, &grid, 2.0).unwrap().cost / pairs.len() as f64;
    }
    assert!(whole <= avg + 1e-12, "{whole} vs {avg}");
}

#[test]
fn single_pair_concentration_is_sample_dispersion() {
    let rep = concentration_check(&[1], 3, 1.0, 50, RngStream::new(13, 0)).unwrap();
    let lvl = &rep.levels[0];
    let mean = lvl.z.iter().sum::<f64>() / 50.0;
    let disp = lvl.z.iter().map(|z| (z - mean).abs()).sum::<f64>() / 50.0;
    assert!((lvl.dispersion - disp).abs() < 1e-15);
    assert_eq!(lvl.deviations.counts.iter().sum::<usize>(), 50);
    assert!((rep.exponent - (1.0 / 3.0 - 0.5)).abs() < 1e-15);
}

#[test]
fn concentration_rejects_p_at_least_d() {
    let err = concentration_check(&[4], 2, 2.0, 10, RngStream::new(14, 0)).unwrap_err();
    assert!(matches!(err, Error::RegimeNotCovered(_)));
}

#[test]
fn noiseless_power_law_fit() {
    let ns = [64.0, 128.0, 256.0, 512.0, 1024.0];
    let means: Vec<f64> = ns.iter().map(|n: &f64| n.powf(-1.0 / 3.0)).collect();
    let fit = rate_fit(&ns, &means, &[0.0; 5], 3, 1.0).unwrap();
    assert!((fit.slope + 1.0 / 3.0).abs() < 1e-12);
    assert!(fit.intercept.abs() < 1e-12);
    assert!(fit.half_width < 1e-12);
}

#[test]
fn two_dimensional_normalization_is_flat() {
    let ns = [64.0, 256.0, 1024.0, 4096.0];
    let means: Vec<f64> = ns.iter().map(|n: &f64| n.ln() / n).collect();
    let fit = rate_fit(&ns, &means, &[0.0; 4], 2, 2.0).unwrap();
    for v in fit.normalized.unwrap() {
        assert!((v - 1.0).abs() < 1e-12);
    }
    assert!(fit.slope.abs() < 1e-10 && (fit.intercept - 1.0).abs() < 1e-12);
}

#[test]
fn rate_fit_rejects_degenerate_scales() {
    assert!(rate_fit(&[8.0, 8.0, 16.0], &[1.0, 1.0, 0.5], &[0.1; 3], 3, 1.0).is_err());
    assert!(rate_fit(&[8.0, 16.0], &[1.0, 0.5], &[0.1; 2], 3, 1.0).is_err());
    assert!(rate_fit(&[8.0, 16.0, 32.0], &[1.0, -0.5, 0.2], &[0.1; 3], 3, 1.0).is_err());
    assert_eq!(expected_slope(1, 2.0), Some(-1.0));
    assert_eq!(expected_slope(2, 2.0), None);
}
