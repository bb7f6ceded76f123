use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Parameter problems are reported as [`Error::InvalidParameter`] and map to
/// a usage/validation failure at the CLI; everything else is a numerical
/// failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("cell (ell={ell}, repetition={repetition}) failed: {source}")]
    Cell {
        ell: usize,
        repetition: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. } | Error::DimensionMismatch(_) => true,
            Error::Cell { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be a finite positive number, got {value}")))
    }
}
