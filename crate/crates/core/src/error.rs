use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the engine.
///
/// Every variant maps to a stable machine-readable code (see [`Error::code`])
/// which the command-line front end forwards in its JSON error report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tilted distribution is improper: {0}")]
    ProprietyViolation(String),

    #[error("tilt not defined for this family: {0}")]
    FamilyMismatch(String),

    #[error("quadrature grid too narrow: tail mass {tail_mass:.3e} exceeds 1e-9")]
    GridTooNarrow { tail_mass: f64 },

    #[error("quantile level {0} outside (0, 1)")]
    QuantileOutOfRange(f64),

    #[error("selection intercept for arm {0} has not been solved")]
    AlphaUnsolved(u8),

    #[error("quasi-complete separation in propensity fit: fitted probability {0:.3e} at the boundary")]
    SeparationDetected(f64),

    #[error("variance-explained target {0} outside [0, 1)")]
    RhoOutOfRange(f64),

    #[error("no sign change of the calibration residual on [0, {gamma_max}]")]
    NoBracket { gamma_max: f64 },

    #[error("degenerate mixture fit: component weight {weight:.3e} below {floor:.3e}")]
    DegenerateFit { weight: f64, floor: f64 },

    #[error("empty stratum: {0}")]
    EmptyStratum(String),

    #[error("schema violation at {pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },

    #[error("invariant violation at unit {unit}: {message}")]
    InvariantViolation { unit: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::ProprietyViolation(_) => "PROPRIETY_VIOLATION",
            Error::FamilyMismatch(_) => "FAMILY_MISMATCH",
            Error::GridTooNarrow { .. } => "GRID_TOO_NARROW",
            Error::QuantileOutOfRange(_) => "Q_OUT_OF_RANGE",
            Error::AlphaUnsolved(_) => "ALPHA_UNSOLVED",
            Error::SeparationDetected(_) => "SEPARATION_DETECTED",
            Error::RhoOutOfRange(_) => "RHO_OUT_OF_RANGE",
            Error::NoBracket { .. } => "NO_BRACKET",
            Error::DegenerateFit { .. } => "DEGENERATE_FIT",
            Error::EmptyStratum(_) => "EMPTY_STRATUM",
            Error::SchemaViolation { .. } => "SCHEMA_VIOLATION",
            Error::InvariantViolation { .. } => "INVARIANT_VIOLATION",
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::Optimizer(_) => "OPTIMIZER_FAILURE",
            Error::Io(_) => "IO_ERROR",
            Error::Csv(_) => "CSV_ERROR",
            Error::Json(_) => "JSON_ERROR",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::QuantileOutOfRange(_) | Error::RhoOutOfRange(_) | Error::InvalidInput(_) => ErrorClass::Usage,
            Error::EmptyStratum(_)
            | Error::SchemaViolation { .. }
            | Error::InvariantViolation { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => ErrorClass::Data,
            _ => ErrorClass::Numeric,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
