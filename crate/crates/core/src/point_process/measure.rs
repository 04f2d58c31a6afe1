use serde::{Deserialize, Serialize};

use super::region::BoxRegion;
use crate::error::{invalid, Result};

/// Points stored as a flat coordinate buffer with stride `dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    region: BoxRegion,
}

impl PointCloud {
    pub fn new(coords: Vec<f64>, region: BoxRegion) -> Result<Self> {
        let dim = region.dim();
        if coords.len() % dim != 0 {
            return invalid(format!(
                "coordinate buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            ));
        }
        let cloud = Self {
            dim,
            coords,
            region,
        };
        for i in 0..cloud.len() {
            let x = cloud.point(i);
            if x.iter().any(|c| c.is_nan()) {
                return invalid(format!("point {i} has a NaN coordinate"));
            }
            if !cloud.region.contains_closed(x) {
                return invalid(format!("point {i} = {x:?} lies outside the region"));
            }
        }
        Ok(cloud)
    }

    pub fn empty(region: BoxRegion) -> Self {
        Self {
            dim: region.dim(),
            coords: Vec::new(),
            region,
        }
    }

    pub(crate) fn from_raw(coords: Vec<f64>, region: BoxRegion) -> Self {
        Self {
            dim: region.dim(),
            coords,
            region,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    /// First `n` points, keeping the region.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self::from_raw(self.coords[..n * self.dim].to_vec(), self.region.clone())
    }

    /// Unit-weight empirical measure `Σ δ_{X_i}`.
    pub fn to_measure(&self) -> WeightedMeasure {
        WeightedMeasure {
            dim: self.dim,
            coords: self.coords.clone(),
            weights: vec![1.0; self.len()],
        }
    }
}

/// Finite atomic measure `Σ w_i δ_{x_i}` with strictly positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("measure dimension must be at least 1");
        }
        if coords.len() != dim * weights.len() {
            return invalid(format!(
                "{} coordinates do not match {} atoms in dimension {dim}",
                coords.len(),
                weights.len()
            ));
        }
        if coords.iter().any(|c| c.is_nan()) {
            return invalid("atom location has a NaN coordinate");
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return invalid(format!("atom weights must be finite and positive, got {w}"));
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn uniform_weights(dim: usize, coords: Vec<f64>, weight: f64) -> Result<Self> {
        let n = coords.len() / dim.max(1);
        Self::new(dim, coords, vec![weight; n])
    }

    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), dim * weights.len());
        Self {
            dim,
            coords,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `factor · self`; a zero factor yields the empty measure.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return invalid(format!(
                "mass scale factor must be nonnegative, got {factor}"
            ));
        }
        if factor == 0.0 {
            return Ok(Self::empty(self.dim));
        }
        Ok(Self::from_raw(
            self.dim,
            self.coords.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
        ))
    }

    /// Push-forward under `x ↦ s·x`.
    pub fn dilated(&self, s: f64) -> Self {
        Self::from_raw(
            self.dim,
            self.coords.iter().map(|c| c * s).collect(),
            self.weights.clone(),
        )
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let coords = self
            .coords
            .chunks(self.dim)
            .flat_map(|x| x.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        Self::from_raw(self.dim, coords, self.weights.clone())
    }

    /// Sum of measures; atoms are concatenated, not merged.
    pub fn concat(parts: &[WeightedMeasure]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return invalid("cannot concatenate an empty list of measures");
        };
        let dim = first.dim;
        if parts.iter().any(|m| m.dim != dim) {
            return invalid("dimension mismatch in measure sum");
        }
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for m in parts {
            coords.extend_from_slice(&m.coords);
            weights.extend_from_slice(&m.weights);
        }
        Ok(Self::from_raw(dim, coords, weights))
    }

    /// Atoms lying in the half-open `region`.
    pub fn restrict(&self, region: &BoxRegion) -> Self {
        self.filter(|x| region.contains(x))
    }

    pub fn filter(&self, mut keep: impl FnMut(&[f64]) -> bool) -> Self {
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for i in 0..self.len() {
            let x = self.point(i);
            if keep(x) {
                coords.extend_from_slice(x);
                weights.push(self.weights[i]);
            }
        }
        Self::from_raw(self.dim, coords, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        assert!(WeightedMeasure::new(1, vec![0.0], vec![0.0]).is_err());
        assert!(WeightedMeasure::new(1, vec![0.0], vec![-1.0]).is_err());
        assert!(WeightedMeasure::new(1, vec![f64::NAN], vec![1.0]).is_err());
        assert!(WeightedMeasure::new(2, vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn restrict_closed_lower_open_upper() {
        let m = WeightedMeasure::new(1, vec![0.5, 1.5, 1.0, 0.0], vec![1.0; 4]).unwrap();
        let r = BoxRegion::new(vec![0.0], vec![1.0]).unwrap();
        let kept = m.restrict(&r);
        assert_eq!(kept.coords(), &[0.5, 0.0]);
        assert_eq!(m.restrict(&r).restrict(&r), kept);
        assert!(WeightedMeasure::empty(1).restrict(&r).is_empty());
    }

    #[test]
    fn cloud_rejects_outside_points() {
        let r = BoxRegion::cube(2, 1.0).unwrap();
        assert!(PointCloud::new(vec![0.5, 1.5], r.clone()).is_err());
        assert!(PointCloud::new(vec![0.5, 1.0], r).is_ok());
    }
}
