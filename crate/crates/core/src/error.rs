use thiserror::Error;

/// Errors raised by the library's operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),

    #[error("empirical measure of an empty occupancy vector")]
    EmptyOccupancy,

    #[error("statistic undefined: Fermi-Dirac needs N <= L (got N = {n}, L = {l})")]
    StatisticUndefined { l: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable queue: arrival mean {mean} >= 1")]
    UnstableQueue { mean: f64 },

    #[error("state space of {states} states exceeds the guard of {guard}")]
    StateSpaceTooLarge { states: u128, guard: usize },

    #[error("no unique stationary distribution: {closed_classes} closed classes")]
    NoUniqueStationary { closed_classes: usize },

    #[error("moment generating function unreliable under truncation at lambda = {lambda}")]
    TruncatedMgf { lambda: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
