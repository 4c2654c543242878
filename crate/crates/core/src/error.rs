use thiserror::Error;

/// Location-annotated syntax error produced by the formula and structure readers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid formula: {0}")]
    InvalidFormula(String),
    #[error("formula is not primitive positive (contains a disjunction)")]
    NotPrimitivePositive,
    #[error("liberal variable sets differ: {0}")]
    LibMismatch(String),
    #[error("formula has no liberal variables")]
    EmptyLib,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),
    #[error("search limit exceeded: {0}")]
    LimitExceeded(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
