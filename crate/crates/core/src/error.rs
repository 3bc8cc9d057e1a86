use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported qubit count {requested}; expected 1..={max}")]
    QubitCount { requested: usize, max: usize },

    #[error("circuit acts on {circuit} qubits but the state has {state}")]
    QubitMismatch { circuit: usize, state: usize },

    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit register")]
    QubitIndex { qubit: usize, num_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("gate matrix is not unitary (max deviation {deviation:e})")]
    NonUnitary { deviation: f64 },

    #[error("qubit subset must not be empty")]
    EmptyQubitSubset,

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("{name} = {value} is outside [0, 1]")]
    Probability { name: &'static str, value: f64 },

    #[error("{name} = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset line {line}: {message}")]
    DatasetLine { line: usize, message: String },

    #[error("dataset contains no records")]
    EmptyDataset,

    #[error("arm `{0}` has no recorded pulls")]
    NoPulls(&'static str),

    #[error("iteration budget must be at least 1")]
    ZeroBudget,

    #[error("degenerate optimizer setup: {0}")]
    DegenerateSimplex(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    ConfigFile {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown figure `{id}`; valid ids: {valid}")]
    UnknownFigure { id: String, valid: String },

    #[error("{} of {total} sub-runs failed: {}", .failed.len(), .failed.join("; "))]
    SubRuns { failed: Vec<String>, total: usize },

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_probability<T: crate::Scalar>(name: &'static str, value: T) -> Result<()> {
    let v = value.as_f64();
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Probability { name, value: v })
    }
}
