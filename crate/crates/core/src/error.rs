use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("path loss undefined at non-positive distance {0}")]
    NonPositiveDistance(f64),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("slot {slot} outside 1..={horizon}")]
    SlotOutOfRange { slot: usize, horizon: usize },

    #[error("lambda {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("user {user} cannot reach its destination: distance {distance} exceeds reach {reach}")]
    UnreachableDestination { user: usize, distance: f64, reach: f64 },

    #[error("infeasible at slot {slot}: distance to destination {distance} exceeds reach {reach}")]
    Infeasible { slot: usize, distance: f64, reach: f64 },

    #[error("trajectory violates the velocity constraint at step {step}")]
    InfeasibleTrajectory { step: usize },

    #[error("strong convexity {mu} exceeds learning-rate denominator {gamma}")]
    MuExceedsGamma { mu: f64, gamma: f64 },

    #[error("{0} norm is not supported here")]
    UnsupportedNorm(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
