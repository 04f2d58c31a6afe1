use serde::{Deserialize, Serialize};

use super::region::BoxRegion;
use crate::error::{invalid, Result};

const MULTIPLE_TOL: f64 = 1e-9;
const VOLUME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    parent: BoxRegion,
    cells: Vec<BoxRegion>,
}

impl Partition {
    pub fn new(parent: BoxRegion, cells: Vec<BoxRegion>) -> Result<Self> {
        if cells.is_empty() {
            return invalid("partition needs at least one cell");
        }
        if cells.iter().any(|c| c.dim() != parent.dim()) {
            return invalid("partition cell dimension differs from parent");
        }
        let covered: f64 = cells.iter().map(|c| c.volume()).sum();
        if (covered - parent.volume()).abs() > 1e-9 * parent.volume() {
            return invalid(format!(
                "cells cover volume {covered} but parent has volume {}",
                parent.volume()
            ));
        }
        Ok(Self { parent, cells })
    }

    pub fn trivial(parent: BoxRegion) -> Self {
        Self {
            cells: vec![parent.clone()],
            parent,
        }
    }

    /// Product grid with `splits[i]` equal pieces along axis `i`; axis 0 varies fastest.
    pub fn regular(parent: &BoxRegion, splits: &[usize]) -> Result<Self> {
        let d = parent.dim();
        if splits.len() != d || splits.iter().any(|&s| s == 0) {
            return invalid("regular partition needs one positive split count per axis");
        }
        let cuts: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let h = parent.sides()[i] / splits[i] as f64;
                let mut c: Vec<f64> = (0..splits[i])
                    .map(|k| parent.origin()[i] + k as f64 * h)
                    .collect();
                c.push(parent.upper(i));
                c
            })
            .collect();
        Ok(Self {
            parent: parent.clone(),
            cells: product_cells(&cuts),
        })
    }

    /// One step of the near-dyadic refinement: each side `m_i·unit` is cut
    /// into `⌊m_i/2⌋·unit` and the remainder; sides with `m_i = 1` are kept.
    pub fn split_near_dyadic(region: &BoxRegion, unit: f64) -> Result<Self> {
        if !(unit.is_finite() && unit > 0.0) {
            return invalid(format!("unit must be positive, got {unit}"));
        }
        let multiples = integer_multiples(region, unit)?;
        let cuts: Vec<Vec<f64>> = multiples
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let lo = region.origin()[i];
                if m == 1 {
                    vec![lo, region.upper(i)]
                } else {
                    vec![lo, lo + (m / 2) as f64 * unit, region.upper(i)]
                }
            })
            .collect();
        let partition = Self {
            parent: region.clone(),
            cells: product_cells(&cuts),
        };
        if !partition.is_admissible() {
            return invalid(format!(
                "near-dyadic split of side multiples {multiples:?} is not admissible"
            ));
        }
        Ok(partition)
    }

    pub fn parent(&self) -> &BoxRegion {
        &self.parent
    }

    pub fn cells(&self) -> &[BoxRegion] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_admissible(&self) -> bool {
        let v = self.parent.volume();
        let lower = 3f64.powi(-(self.parent.dim() as i32)) * v;
        self.cells.iter().all(|c| {
            let cv = c.volume();
            c.is_moderate() && cv >= lower * (1.0 - VOLUME_TOL) && cv <= v * (1.0 + VOLUME_TOL)
        })
    }

    /// Index of the cell containing `x` under the half-open convention; points
    /// on the parent's upper faces go to the adjacent cell.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if let Some(i) = self.cells.iter().position(|c| c.contains(x)) {
            return Some(i);
        }
        if !self.parent.contains_closed(x) {
            return None;
        }
        self.cells.iter().position(|c| {
            (0..x.len()).all(|i| {
                let at_top = x[i] == self.parent.upper(i) && c.upper(i) == self.parent.upper(i);
                at_top || (x[i] >= c.origin()[i] && x[i] < c.upper(i))
            })
        })
    }
}

fn integer_multiples(region: &BoxRegion, unit: f64) -> Result<Vec<u64>> {
    region
        .sides()
        .iter()
        .map(|&s| {
            let m = (s / unit).round();
            if m < 1.0 || ((s / unit) - m).abs() > MULTIPLE_TOL * m {
                invalid(format!(
                    "side {s} is not an integer multiple of unit {unit}"
                ))
            } else {
                Ok(m as u64)
            }
        })
        .collect()
}

fn product_cells(cuts: &[Vec<f64>]) -> Vec<BoxRegion> {
    let d = cuts.len();
    let counts: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();
    let total: usize = counts.iter().product();
    let mut cells = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let origin = (0..d).map(|i| cuts[i][idx[i]]).collect();
        let sides = (0..d)
            .map(|i| cuts[i][idx[i] + 1] - cuts[i][idx[i]])
            .collect();
        cells.push(BoxRegion::new(origin, sides).expect("cut points are strictly increasing"));
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    cells
}
