//! Exact optimal transport and Monte Carlo tools for random Euclidean
//! matching: Poisson sampling, network-simplex and assignment solvers,
//! sub-additivity certificates, a Neumann Poisson solver and tail statistics.

pub mod error;
pub mod estimate;
pub mod pde_ansatz;
pub mod point_process;
pub mod statistics;
pub mod subadditivity;
pub mod transport;

pub use error::{Error, Result};
