use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("window mismatch between operands")]
    WindowMismatch,

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("degenerate query rectangle")]
    DegenerateQuery,

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enlarge window: {0}")]
    WindowTooSmall(String),

    #[error("refine grid: {0}")]
    RefineGrid(String),

    #[error("no crossing: {0}")]
    NoCrossing(String),

    #[error("witness inequality failed: {0}")]
    Witness(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
