use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix that must be invertible (or a discriminant that must be
    /// non-negative) is not, beyond round-off.
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// Normalization by a vanishing quantity was requested.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A propagated state violated an invariant that the construction
    /// guarantees, e.g. a non-physical covariance.
    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Eigensolver or integrator failure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalDegeneracy(_)
                | Error::InternalConsistency(_)
                | Error::Numerical(_)
                | Error::InsufficientData(_)
        )
    }
}
