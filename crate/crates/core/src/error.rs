use thiserror::Error;

/// Errors raised by curve construction, the solvers and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("time {t} is outside the horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(f64, f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid rate function: {0}")]
    InvalidRate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The minimum energy curve exceeds the harvested energy curve.
    #[error("infeasible instance: M(t) exceeds H(t) by {excess:.3e} at t = {t}")]
    Infeasible { t: f64, excess: f64 },

    #[error("minimum energy curve must start at zero, got M(0) = {0}")]
    NonZeroStart(f64),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("root bracket not found: {0}")]
    BracketNotFound(String),

    /// Raised by the brute-force oracles only, so that callers can tell a
    /// grid artefact apart from an infeasible instance.
    #[error("oracle grid infeasible at slot {slot}: {reason}")]
    GridInfeasible { slot: usize, reason: String },

    #[error("oracle grid too coarse: {0}")]
    GridTooCoarse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
