use crate::error::{invalid, Result};
use crate::point_process::WeightedMeasure;

/// Kantorovich–Rubinstein certificate `|∫ f d(μ − ν)| / Lip(f) ≤ W₁(μ, ν)`.
pub fn w1_dual_lower_bound(
    mu: &WeightedMeasure,
    nu: &WeightedMeasure,
    testfn: impl Fn(&[f64]) -> f64,
    lipschitz_constant: f64,
) -> Result<f64> {
    if !(lipschitz_constant.is_finite() && lipschitz_constant > 0.0) {
        return invalid(format!(
            "Lipschitz constant must be positive, got {lipschitz_constant}"
        ));
    }
    let integrate = |m: &WeightedMeasure| -> Result<f64> {
        let mut s = 0.0;
        for i in 0..m.len() {
            let v = testfn(m.point(i));
            if !v.is_finite() {
                return invalid(format!("test function is not finite at {:?}", m.point(i)));
            }
            s += m.weight(i) * v;
        }
        Ok(s)
    };
    Ok((integrate(mu)? - integrate(nu)?).abs() / lipschitz_constant)
}
