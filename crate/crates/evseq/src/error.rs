use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: configuration and parameter
/// problems exit with 2, data problems with 3, and internal invariant
/// violations with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its legal range (bad alpha, weights that do
    /// not sum to one, an empty grid, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A bet supplied to a wealth ledger is negative or NaN.
    #[error("invalid bet: {0}")]
    InvalidBet(f64),

    /// The input data violates the declared schema or support.
    #[error("data error{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Data {
        /// 1-based input line, when the error comes from a parsed stream.
        line: Option<usize>,
        msg: String,
    },

    /// The run configuration is unusable (unknown method, missing input,
    /// untruncated stopping rule, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An internal invariant that should hold analytically was violated.
    #[error("internal invariant violation: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data {
            line: None,
            msg: msg.into(),
        }
    }

    pub fn data_at(line: usize, msg: impl Into<String>) -> Self {
        Error::Data {
            line: Some(line),
            msg: msg.into(),
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::InvalidBet(_) | Error::Config(_) => 2,
            Error::Data { .. } => 3,
            Error::Invariant(_) => 4,
            Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
