use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shift is empty after pruning stranded states (removed: {removed:?})")]
    EmptyShift { removed: Vec<String> },

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("duplicate state label `{0}`")]
    DuplicateState(String),

    #[error("invalid word `{word}`: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("word of length {len} is too short, need at least {need}")]
    WordTooShort { len: usize, need: usize },

    #[error("enumeration of {requested} items exceeds the cap of {cap}")]
    ResourceLimit { requested: u128, cap: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("functions live on different shifts")]
    MismatchedShift,

    #[error("theta mismatch: {0} vs {1}")]
    ThetaMismatch(f64, f64),

    #[error("potential has range {0}; the transfer matrix needs range <= 2 (recode first)")]
    RangeTooLarge(usize),

    #[error("shift is not topologically mixing")]
    NotMixing,

    #[error("eigensolver did not converge after {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("kernel incompatible with adjacency: {0}")]
    IncompatibleKernel(String),

    #[error("stationary vector is ambiguous: recurrent classes {0:?}")]
    AmbiguousStationary(Vec<Vec<String>>),

    #[error("pressure gap {0:e} is negative beyond tolerance")]
    NegativeGap(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
