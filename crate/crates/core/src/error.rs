use std::path::PathBuf;

use thiserror::Error;

/// Grid location of a sample: chart indices and fiber index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub i1: usize,
    pub i2: usize,
    pub k: usize,
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.i1, self.i2, self.k)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: String, found: String },

    #[error("non-finite samples in {0}")]
    NonFinite(&'static str),

    #[error("Finsler function is not positive at node {node}: phi = {value}")]
    NonPositive { node: Node, value: f64 },

    #[error("degenerate metric at node {node}: margin {margin:e}")]
    DegenerateMetric { node: Node, margin: f64 },

    #[error("metric family `{0}` is chart-restricted and cannot live on the torus grid")]
    ChartRestricted(String),

    #[error("scenario line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("run directory {path}: {message}")]
    RunDir { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
