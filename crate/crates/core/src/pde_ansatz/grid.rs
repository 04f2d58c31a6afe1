use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::point_process::{BoxRegion, WeightedMeasure};

/// Piecewise-constant field on a regular grid of `region`, one value per
/// cell, last axis varying fastest (the order of `grid_measure`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub region: BoxRegion,
    pub resolution: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(region: BoxRegion, resolution: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if resolution.len() != region.dim() || resolution.iter().any(|&r| r == 0) {
            return invalid("grid resolution needs one positive entry per axis");
        }
        let n: usize = resolution.iter().product();
        if values.len() != n {
            return invalid(format!("grid of {n} cells got {} values", values.len()));
        }
        Ok(Self {
            region,
            resolution,
            values,
        })
    }

    pub fn zeros(region: BoxRegion, resolution: Vec<usize>) -> Result<Self> {
        let n = resolution.iter().product();
        Self::new(region, resolution, vec![0.0; n])
    }

    /// Field with `f` evaluated at each cell center.
    pub fn from_fn(
        region: BoxRegion,
        resolution: Vec<usize>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let mut field = Self::zeros(region, resolution)?;
        let mut x = vec![0.0; field.dim()];
        for c in 0..field.len() {
            field.center_into(c, &mut x);
            field.values[c] = f(&x);
        }
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.region.sides()[axis] / self.resolution[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Distance in the flat index between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.resolution[axis + 1..].iter().product()
    }

    pub fn center_into(&self, mut cell: usize, out: &mut [f64]) {
        for a in (0..self.dim()).rev() {
            let i = cell % self.resolution[a];
            cell /= self.resolution[a];
            out[a] = self.region.origin()[a] + (i as f64 + 0.5) * self.spacing(a);
        }
    }

    /// `∫ field`, i.e. the cell-volume weighted sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn abs_integral(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell_volume()
    }

    /// `∫ |field|^p`.
    pub fn lp_integral(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        if self.resolution != other.resolution || self.region != other.region {
            return invalid("fields live on different grids");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        GridField::new(self.region.clone(), self.resolution.clone(), values)
    }

    /// `∫ self · other`.
    pub fn inner(&self, other: &GridField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.cell_volume()
    }

    /// Atoms at the cell centers carrying `value · cell volume`; cells with
    /// nonpositive value are skipped.
    pub fn to_measure(&self) -> Result<WeightedMeasure> {
        let vol = self.cell_volume();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        let mut x = vec![0.0; self.dim()];
        for (c, &v) in self.values.iter().enumerate() {
            if v > 0.0 {
                self.center_into(c, &mut x);
                coords.extend_from_slice(&x);
                weights.push(v * vol);
            }
        }
        WeightedMeasure::new(self.dim(), coords, weights)
    }
}

/// Density of `measure` binned on the grid: cell value = mass / cell volume.
/// Atoms on the upper faces of `region` go to the last cell.
pub fn bin_to_grid(
    measure: &WeightedMeasure,
    region: &BoxRegion,
    resolution: &[usize],
) -> Result<GridField> {
    if measure.dim() != region.dim() {
        return invalid("dimension mismatch between measure and region");
    }
    let mut field = GridField::zeros(region.clone(), resolution.to_vec())?;
    let vol = field.cell_volume();
    let d = field.dim();
    for a in 0..measure.len() {
        let x = measure.point(a);
        if !region.contains_closed(x) {
            return invalid(format!("atom {x:?} lies outside the grid region"));
        }
        let mut idx = 0usize;
        for k in 0..d {
            let i = ((x[k] - region.origin()[k]) / field.spacing(k)).floor() as usize;
            idx = idx * resolution[k] + i.min(resolution[k] - 1);
        }
        field.values[idx] += measure.weight(a) / vol;
    }
    Ok(field)
}
