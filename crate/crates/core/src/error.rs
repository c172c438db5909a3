use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("only the 19-cell hexagonal tiling is supported, got {0} cells")]
    UnsupportedCellCount(usize),

    #[error("minimum distance {d_min} m must be below the cell radius {d_max} m")]
    InvalidRadius { d_min: f64, d_max: f64 },

    #[error("grid size must be at least 1")]
    EmptyGrid,

    #[error("test point {point} of cell {cell} coincides with base station {bs}")]
    ZeroDistance { cell: usize, point: usize, bs: usize },

    #[error("invalid path-loss law: coefficient {coeff}, exponent {exponent}")]
    InvalidPathLoss { coeff: f64, exponent: f64 },

    #[error("rate undefined for an empty cell")]
    NoUsers,

    #[error("zero forcing needs at least as many antennas as users ({antennas} < {users})")]
    TooFewAntennas { antennas: f64, users: u32 },

    #[error("pilot overhead {pilots} symbols exceeds the coherence interval {coherence}")]
    PilotOverhead { pilots: f64, coherence: f64 },

    #[error("transmit power {p} W exceeds the PAPR back-off limit {limit} W")]
    BackoffExceeded { p: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),

    #[error("empty feasible antenna range for {users} users with at most {max_antennas} antennas")]
    EmptyStrategy { users: u32, max_antennas: u32 },

    #[error("best-response iteration did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("activity fixed point did not converge within {0} iterations")]
    ActivityNoConvergence(usize),

    #[error("load profile line {line}: {msg}")]
    Profile { line: u64, msg: String },

    #[error("interval {interval}: {source}")]
    Interval {
        interval: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
