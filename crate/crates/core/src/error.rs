use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A time or point fell outside the interval on which a family is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical procedure did not reach its target accuracy.
    #[error("numeric error: {message} (achieved {achieved:.3e})")]
    Numeric { message: String, achieved: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    /// The gamma-matrix representation does not allow the lower spinor to be eliminated.
    #[error("representation error: {0}")]
    Representation(String),

    #[error("integration error at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("escape error at t = {t}: boundary mass {mass:.3e} exceeds cap {cap:.3e}")]
    Escape { t: f64, mass: f64, cap: f64 },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn numeric(message: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric {
            message: message.into(),
            achieved,
        }
    }
}
