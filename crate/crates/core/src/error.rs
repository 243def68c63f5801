use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("arity mismatch for `{pred}`: expected {expected}, found {found}")]
    Arity {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("mode error: {0}")]
    Mode(String),
    #[error("domain too large for exact enumeration: {atoms} ground atoms (cap {cap})")]
    TooLarge { atoms: usize, cap: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("model signature hash mismatch: file has {found}, expected {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("unsupported model container version {0}")]
    Version(u32),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
