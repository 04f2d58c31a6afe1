use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible transport: {0}")]
    Infeasible(String),

    #[error("cell {cell} has mu mass {mu_mass} but no reference mass")]
    InfeasibleCell { cell: usize, mu_mass: f64 },

    #[error(
        "theta = {theta} is below the feasibility threshold {required} = 2 max_i |kappa - kappa_i|"
    )]
    ThetaTooSmall { theta: f64, required: f64 },

    #[error("reference density vanishes on cell {cell}")]
    VanishingReference { cell: usize },

    #[error("regime not covered: {0}")]
    RegimeNotCovered(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
