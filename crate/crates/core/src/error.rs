use std::path::PathBuf;

use crate::assignment::Tuple;
use crate::terrain::Pixel;

/// Errors produced by the library. The CLI maps these onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("probabilities at sample {sample}, pixel ({row}, {col}) sum to {sum}")]
    ProbabilityDrift {
        sample: usize,
        row: usize,
        col: usize,
        sum: f64,
    },

    #[error("no cost defined for class {0}")]
    MissingClassCost(usize),

    #[error("invalid cost mapping: {0}")]
    InvalidMapping(String),

    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),

    #[error("invalid endpoint {0}: out of bounds or impassable")]
    InvalidEndpoint(Pixel),

    #[error("no path from {start} to {goal}")]
    NoPath { start: Pixel, goal: Pixel },

    #[error("no path for vehicle {vehicle} to demand {demand} at lambda {lambda}")]
    CandidateNoPath {
        vehicle: usize,
        demand: usize,
        lambda: f64,
    },

    #[error("invalid candidate request: {0}")]
    InvalidCandidates(String),

    #[error("realized path cost is zero for tuple {0}; efficiency is undefined")]
    ZeroCostPath(Tuple),

    #[error("tuple {0} is not in the efficiency matrix")]
    UnknownTuple(Tuple),

    #[error("empty sample set")]
    EmptySamples,

    #[error("invalid risk parameters: {0}")]
    InvalidParams(String),

    #[error("instance too large for exhaustive search: {0} feasible subsets")]
    InstanceTooLarge(u128),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
