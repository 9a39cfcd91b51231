use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Mismatch { expected: usize, got: usize },

    #[error("singular configuration: particles {0} and {1} coincide")]
    SingularConfiguration(usize, usize),

    #[error("effective scattering length needs at least three particles (unitary limit for N = 2)")]
    EmptyPairSum,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("precision loss in alternating recursion: {digits_lost:.1} digits cancelled")]
    PrecisionLoss { digits_lost: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
