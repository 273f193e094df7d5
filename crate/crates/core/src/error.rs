use thiserror::Error;

/// Errors raised by planning, execution and verification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not normalized: {0}")]
    NotNormalized(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("not a contraction: {0}")]
    NotContraction(String),

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    #[error("input spectrum is not majorized by the target spectrum")]
    NotMajorized,

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("stacked operators are not an isometry (deviation {0:e})")]
    NotIsometry(f64),

    #[error("infeasible distribution: {0}")]
    InfeasibleDistribution(String),

    #[error("Bob space dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that mean "the requested transformation cannot be done",
    /// as opposed to malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleTarget(_)
                | Error::NotMajorized
                | Error::InfeasibleDistribution(_)
                | Error::NotContraction(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
