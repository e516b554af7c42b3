use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("required GTFS file `{0}` is missing")]
    MissingFile(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("feature `{0}` is not finite")]
    NonFiniteFeature(&'static str),

    #[error("training diverged at epoch {epoch} (loss is NaN); try a smaller step size")]
    Diverged { epoch: usize },

    #[error("stop index {index} cannot be removed from a sequence of {len} stops (endpoints are fixed)")]
    EndpointRemoval { index: usize, len: usize },

    #[error("stop ordering supports 3..=8 stops, got {0}")]
    TooManyStops(usize),

    #[error("leg {from} -> {to} is unreachable")]
    Unreachable { from: usize, to: usize },

    #[error("graph too large for exhaustive enumeration: {nodes} nodes in leg subgraph (max {max})")]
    TooLarge { nodes: usize, max: usize },

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
