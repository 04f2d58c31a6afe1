use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const MODERATE_RATIO: f64 = 2.0;
const RATIO_TOL: f64 = 1e-12;

/// Axis-aligned box `origin + [0, sides)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    origin: Vec<f64>,
    sides: Vec<f64>,
}

impl BoxRegion {
    pub fn new(origin: Vec<f64>, sides: Vec<f64>) -> Result<Self> {
        if origin.is_empty() {
            return invalid("box dimension must be at least 1");
        }
        if origin.len() != sides.len() {
            return invalid(format!(
                "origin has {} coordinates but sides has {}",
                origin.len(),
                sides.len()
            ));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return invalid("box origin must be finite");
        }
        if let Some(s) = sides.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return invalid(format!("box sides must be finite and positive, got {s}"));
        }
        Ok(Self { origin, sides })
    }

    /// The cube `Q_L = [0, L)^d`.
    pub fn cube(d: usize, side: f64) -> Result<Self> {
        Self::new(vec![0.0; d], vec![side; d])
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + self.sides[axis]
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.sides.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.sides)
            .map(|(o, s)| o + 0.5 * s)
            .collect()
    }

    /// Half-open membership: closed on lower faces, open on upper faces.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &xi)| xi >= self.origin[i] && xi < self.upper(i))
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &xi)| xi >= self.origin[i] && xi <= self.upper(i))
    }

    pub fn aspect_ratio(&self) -> f64 {
        let max = self.sides.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.sides.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    pub fn is_moderate(&self) -> bool {
        self.aspect_ratio() <= MODERATE_RATIO * (1.0 + RATIO_TOL)
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return invalid("shift dimension mismatch");
        }
        let origin = self.origin.iter().zip(shift).map(|(o, s)| o + s).collect();
        Self::new(origin, self.sides.clone())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return invalid(format!("scale factor must be positive, got {factor}"));
        }
        Self::new(
            self.origin.iter().map(|o| o * factor).collect(),
            self.sides.iter().map(|s| s * factor).collect(),
        )
    }

    /// Distance from an interior point `x` to the nearest face of the box.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| (xi - self.origin[i]).min(self.upper(i) - xi))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_sides() {
        assert!(BoxRegion::new(vec![0.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(BoxRegion::new(vec![0.0], vec![-1.0]).is_err());
        assert!(BoxRegion::new(vec![0.0], vec![f64::NAN]).is_err());
        assert!(BoxRegion::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn moderate_threshold_is_two() {
        let b = BoxRegion::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        assert!(b.is_moderate());
        let b = BoxRegion::new(vec![0.0, 0.0], vec![2.01, 1.0]).unwrap();
        assert!(!b.is_moderate());
    }

    #[test]
    fn half_open_membership() {
        let b = BoxRegion::cube(2, 1.0).unwrap();
        assert!(b.contains(&[0.0, 0.5]));
        assert!(!b.contains(&[1.0, 0.5]));
        assert!(b.contains_closed(&[1.0, 0.5]));
        assert_eq!(b.volume(), 1.0);
        assert!((b.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }
}
