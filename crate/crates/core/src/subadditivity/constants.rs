use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Smallest `C` with `(a + b)^p ≤ (1 + ε)·a^p + C·b^p` for all `a, b ≥ 0`.
///
/// By convexity `(a + b)^p ≤ (1 + δ)^{p−1} a^p + (1 + 1/δ)^{p−1} b^p`; choosing
/// `(1 + δ)^{p−1} = 1 + ε` gives the constant.
pub fn c_elementary(epsilon: f64, p: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let delta = (1.0 + epsilon).powf(1.0 / (p - 1.0)) - 1.0;
    Ok((1.0 + 1.0 / delta).powf(p - 1.0))
}

/// `(1 − 2^{−1/p})^{−p}`, the constant of the Benamou–Brenier competitor
/// bound `W_p^p(μ, λ) ≤ c_bb · ∫|∇φ|^p / inf λ^{p−1}`.
pub fn c_bb(p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    Ok((1.0 - 2f64.powf(-1.0 / p)).powf(-p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub epsilon: f64,
    pub p: f64,
    pub c_elementary: f64,
    pub c_bb: f64,
}

impl DerivedConstants {
    pub fn new(epsilon: f64, p: f64) -> Result<Self> {
        Ok(Self {
            epsilon,
            p,
            c_elementary: c_elementary(epsilon, p)?,
            c_bb: c_bb(p)?,
        })
    }
}
