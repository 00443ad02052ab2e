use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Rate-expression parse failure. `pos` is a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty rate expression")]
    Empty,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("division by zero while evaluating rate at t = {t}")]
    DivisionByZero { t: f64 },

    #[error("non-finite value {value} at t = {t}")]
    NonFinite { t: f64, value: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance within depth {depth}")]
    QuadratureDepth { a: f64, b: f64, depth: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("model failed validation:\n{0}")]
    Validation(ValidationReport),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("tolerance unreachable: {0}")]
    ToleranceUnreachable(String),

    #[error("probability simplex drift {drift:e} at t = {t}")]
    SimplexDrift { t: f64, drift: f64 },

    #[error("eigenvalue oracle did not converge")]
    EigenNonConvergence,

    #[error("model is not time-homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("condition (ii) failed: min off-diagonal {min_offdiag:e} at t = {t}, entry ({i}, {j})")]
    ConditionFailed {
        min_offdiag: f64,
        t: f64,
        i: usize,
        j: usize,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures caused by malformed input rather than numerics or the model itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::InvalidArgument(_)
                | Error::Dimension(_)
                | Error::Config(_)
                | Error::Model(_)
                | Error::Unsupported(_)
        )
    }

    /// True for failures of a numerical method (solver, quadrature, eigen oracle).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureDepth { .. }
                | Error::StepUnderflow { .. }
                | Error::ToleranceUnreachable(_)
                | Error::SimplexDrift { .. }
                | Error::EigenNonConvergence
                | Error::NonFinite { .. }
                | Error::DivisionByZero { .. }
        )
    }
}
