use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("invalid value at index {index}: {value}")]
    InvalidValue { index: usize, value: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureUnconverged(String),
    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("characteristic function inversion did not converge: {0}")]
    InversionUnconverged(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("configuration mismatch: {0}")]
    MismatchedConfig(String),
    #[error("precision loss: estimated error {estimate:e} exceeds 1% of value {value:e}")]
    PrecisionLoss { estimate: f64, value: f64 },
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("empty input")]
    EmptyInput,
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateSample(_) => "DegenerateSample",
            Error::InvalidValue { .. } => "InvalidValue",
            Error::DomainError(_) => "DomainError",
            Error::Overflow(_) => "Overflow",
            Error::QuadratureUnconverged(_) => "QuadratureUnconverged",
            Error::EigenFailure(_) => "EigenFailure",
            Error::InversionUnconverged(_) => "InversionUnconverged",
            Error::InvalidDensity(_) => "InvalidDensity",
            Error::MismatchedConfig(_) => "MismatchedConfig",
            Error::PrecisionLoss { .. } => "PrecisionLoss",
            Error::ParseError { .. } => "ParseError",
            Error::EmptyInput => "EmptyInput",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
