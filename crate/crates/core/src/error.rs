use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    /// Some target cannot deliver its result to the ground station.
    #[error("infeasible query: unreachable targets {unreachable:?}")]
    Infeasible { unreachable: Vec<String> },

    /// A replayed plan violated a window or deadline. Always a bug.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("unsupported schema {found:?}, expected {expected:?}")]
    Schema { expected: &'static str, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
