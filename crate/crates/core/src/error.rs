use thiserror::Error;

/// Errors produced by the coding, modulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed polynomial `{text}`: {reason}")]
    MalformedPolynomial { text: String, reason: String },

    #[error("generator list is empty")]
    EmptyGenerator,

    #[error("invalid modulus {0}: must be at least 2")]
    InvalidModulus(u32),

    #[error("symbol {symbol} out of range for Z_{modulus}")]
    SymbolOutOfRange { symbol: u32, modulus: u32 },

    #[error("malformed puncture matrix `{text}`: {reason}")]
    MalformedPuncture { text: String, reason: String },

    #[error("invalid puncture matrix: {0}")]
    InvalidPuncture(String),

    #[error("codeword width {got} does not match puncture rows {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("invalid modulation parameters: {0}")]
    InvalidCpm(String),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("sample count {got} does not fill a whole number of trellis steps (nearest fit {expected})")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("error-event enumeration exceeded the limit of {limit} entries")]
    EnumerationLimit { limit: usize },

    #[error("error event table is empty")]
    EmptyTable,

    #[error("transfer function diverges at this SNR (spectral radius {spectral_radius:.6} >= 1)")]
    Divergent { spectral_radius: f64 },

    #[error("linear solve failed: {0}")]
    SingularSolve(String),

    #[error("no candidate puncture matrices satisfy the constraints")]
    NoCandidates,
}

pub type Result<T> = std::result::Result<T, Error>;
