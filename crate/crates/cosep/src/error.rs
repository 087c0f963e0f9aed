use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum CosepError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("matrix has min dimension {0}, exceeding the supported cap of {1}")]
    UnsupportedSize(usize, usize),

    #[error("Sinkhorn balancing infeasible: {0}")]
    BalanceInfeasible(String),

    #[error("degenerate core: {0}")]
    DegenerateCore(String),

    #[error("degenerate self-expression matrix: SPA extracted only {got} of {wanted} indices")]
    DegenerateY {
        got: usize,
        wanted: usize,
        partial: Vec<usize>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CosepError>;
