use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |M - M^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max |U^H U - I| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is singular or numerically singular")]
    Singular,

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("post-selection impossible (probability {probability:e})")]
    PostSelectionImpossible { probability: f64 },

    #[error("no successful shots out of {n_shots}")]
    NoSuccessfulShots { n_shots: u64 },

    #[error("degenerate measured direction (|A d| = {norm:e})")]
    DegenerateDirection { norm: f64 },

    #[error("invalid Pauli specification: {0}")]
    InvalidPauli(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than from the
    /// caller's input format or the filesystem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::NotUnitary { .. }
                | Error::Singular
                | Error::ZeroVector
                | Error::NonFinite
                | Error::PostSelectionImpossible { .. }
                | Error::NoSuccessfulShots { .. }
                | Error::DegenerateDirection { .. }
        )
    }
}
