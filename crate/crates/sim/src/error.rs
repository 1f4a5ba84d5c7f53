use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Model(#[from] d2d_traj::Error),

    #[error("bound check failed: {0}")]
    BoundFailure(String),
}

impl SimError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Model(d2d_traj::Error::Infeasible { .. }) => 3,
            SimError::BoundFailure(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
