use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::measure::{PointCloud, WeightedMeasure};
use super::region::BoxRegion;
use super::rng::RngStream;
use crate::error::{invalid, Result};

const INVERSION_LIMIT: f64 = 30.0;

/// Poisson variate: multiplication (inversion) method below mean 30,
/// Hörmann's PTRS transformed rejection above.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        poisson_inversion(mean, rng)
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let threshold = (-mean).exp();
    let mut k = 0u64;
    let mut prod = 1.0;
    loop {
        prod *= rng.gen::<f64>();
        if prod > threshold {
            k += 1;
        } else {
            return k;
        }
    }
}

fn poisson_ptrs<R: Rng + ?Sized>(lam: f64, rng: &mut R) -> u64 {
    let slam = lam.sqrt();
    let loglam = lam.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let invalpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v = rng.gen::<f64>();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lam + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + invalpha.ln() - (a / (us * us) + b).ln()
            <= -lam + k * loglam - ln_gamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

fn push_uniform<R: Rng + ?Sized>(region: &BoxRegion, n: usize, rng: &mut R, out: &mut Vec<f64>) {
    let d = region.dim();
    out.reserve(n * d);
    for _ in 0..n {
        for i in 0..d {
            let x = region.origin()[i] + region.sides()[i] * rng.gen::<f64>();
            // guard against rounding onto the open upper face
            out.push(if x < region.upper(i) {
                x
            } else {
                region.origin()[i]
            });
        }
    }
}

/// Poisson point process of constant `intensity` on `region`.
pub fn sample_poisson_pp(
    region: &BoxRegion,
    intensity: f64,
    stream: RngStream,
) -> Result<PointCloud> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return invalid(format!("intensity must be positive, got {intensity}"));
    }
    let mut rng = stream.rng();
    let n = poisson_count(intensity * region.volume(), &mut rng) as usize;
    let mut coords = Vec::new();
    push_uniform(region, n, &mut rng, &mut coords);
    Ok(PointCloud::from_raw(coords, region.clone()))
}

/// `n` i.i.d. uniform points on `region`; `n = 0` gives the empty cloud.
pub fn sample_uniform(n: usize, region: &BoxRegion, stream: RngStream) -> PointCloud {
    let mut rng = stream.rng();
    let mut coords = Vec::new();
    push_uniform(region, n, &mut rng, &mut coords);
    PointCloud::from_raw(coords, region.clone())
}

/// Cell-center atoms of a regular grid, equal weights summing to `total_mass`.
/// Atoms are ordered with the last axis varying fastest.
pub fn grid_measure(
    region: &BoxRegion,
    resolution: &[usize],
    total_mass: f64,
) -> Result<WeightedMeasure> {
    let d = region.dim();
    if resolution.len() != d {
        return invalid(format!(
            "resolution has {} entries for dimension {d}",
            resolution.len()
        ));
    }
    if resolution.iter().any(|&r| r == 0) {
        return invalid("grid resolution entries must be at least 1");
    }
    if !(total_mass.is_finite() && total_mass > 0.0) {
        return invalid(format!(
            "grid total mass must be positive, got {total_mass}"
        ));
    }
    let count: usize = resolution.iter().product();
    let h: Vec<f64> = (0..d)
        .map(|i| region.sides()[i] / resolution[i] as f64)
        .collect();
    let mut coords = Vec::with_capacity(count * d);
    let mut idx = vec![0usize; d];
    for _ in 0..count {
        for i in 0..d {
            coords.push(region.origin()[i] + (idx[i] as f64 + 0.5) * h[i]);
        }
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < resolution[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(WeightedMeasure::from_raw(
        d,
        coords,
        vec![total_mass / count as f64; count],
    ))
}
