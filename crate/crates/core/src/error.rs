use std::path::PathBuf;

/// Error type shared by every module in the crate.
///
/// The variants mirror the failure classes the CLI maps to exit codes:
/// data problems exit 2, numerics problems exit 3, compatibility problems
/// exit 4, everything else exits 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A mathematical precondition was violated (zero divisor, negative frequency, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller-supplied input does not satisfy an operation's contract.
    #[error("input error: {0}")]
    Input(String),

    /// Invalid or inconsistent configuration values.
    #[error("config error: {0}")]
    Config(String),

    /// Tensor/layer shape mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// A stateful protocol was used out of order (e.g. stale layer cache).
    #[error("state error: {0}")]
    State(String),

    /// Non-finite values encountered during training.
    #[error("numerics error: {0}")]
    Numerics(String),

    /// Corpus or manifest problems.
    #[error("data error: {0}")]
    Data(String),

    /// Artifact version/hash mismatch or corrupted serialized data.
    #[error("compatibility error: {0}")]
    Compatibility(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code contract: 0 ok, 2 data, 3 numerics, 4 compatibility,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Data(_) => 2,
            Error::Numerics(_) => 3,
            Error::Compatibility(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
