use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("function undefined on eigenvalue {0:.3e}")]
    Domain(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error(
        "map is not invertible (smallest singular value {smallest:.3e}, largest {largest:.3e})"
    )]
    NonInvertible { smallest: f64, largest: f64 },

    #[error("constraints are linearly dependent (Gram eigenvalue {0:.3e})")]
    RankDeficient(f64),

    #[error("semidefinite solver failed: {0}")]
    Solver(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{context}: {source}")]
    AtTime {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_time(self, index: usize, time: f64) -> Error {
        Error::AtTime {
            context: format!("grid index {index} (t = {time})"),
            source: Box::new(self),
        }
    }
}
