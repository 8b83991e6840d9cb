use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid power {0}: must be positive and finite")]
    InvalidPower(f64),

    #[error("invalid constellation order {0}: must be at least 2")]
    InvalidOrder(usize),

    #[error("invalid time-sharing probability {0}: must lie in (0, 1]")]
    InvalidEpsilon(f64),

    #[error("quadrature range misses {missing:.3e} of the probability mass")]
    Coverage { missing: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),
}
