//! Neumann Poisson solver on regular grids, the `∫|∇φ|^p` transport bound,
//! the explicit one-dimensional grid plan and the grid defect experiment.

mod cz;
mod grid;
mod grid_defect;
mod neumann;

pub use cz::{cz_bound_check, CzReport, DISCRETIZATION_SLACK};
pub use grid::{bin_to_grid, GridField};
pub use grid_defect::{
    grid_1d_plan, grid_defect_experiment, grid_defect_replicate, GridDefectEstimate,
    GridDefectSample, GRID_1D_CONSTANT,
};
pub use neumann::{
    apply_neumann_laplacian, grad_p_norm, grad_p_norm_with, solve_neumann_poisson, BoundaryRule,
    COMPATIBILITY_TOL,
};
