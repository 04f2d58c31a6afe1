//! Sub-additivity of the matching cost: the exact three-term decomposition
//! over a partition, Monte Carlo estimators of `f_ref(L)` and `f_bi(L)`, the
//! nested-scale bracket and the bipartite defect decomposition.

mod bipartite;
mod bracket;
mod constants;
mod decompose;
mod estimators;

pub use bipartite::{bipartite_defect, default_theta, BipartiteDefect};
pub use bracket::{fit_bracket, recursive_bracket, BracketFit, BracketResult, BracketTarget};
pub use constants::{c_bb, c_elementary, DerivedConstants};
pub use decompose::{subadd_decompose, DefectReport};
pub use estimators::{
    estimate_f_bi, estimate_f_ref, f_bi_sample, f_ref_sample, grid_resolution, poisson_nn_distance,
    FBiEstimate, FRefEstimate, GRID_ATOM_LIMIT,
};
