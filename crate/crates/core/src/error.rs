use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("phase {0} is outside [0, 1)")]
    InvalidPhase(f64),

    #[error("time {0} must be positive and finite")]
    InvalidTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule needs at least two contracts, got {0}")]
    TooFewContracts(usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("expected profit underflows to zero (value {0})")]
    ZeroExpectedProfit(f64),

    #[error("portfolio size {0} exceeds the supported cap of {1}")]
    PortfolioTooLarge(usize, usize),

    #[error("prediction set is empty")]
    EmptyPredictionSet,
}

pub type Result<T> = std::result::Result<T, Error>;
