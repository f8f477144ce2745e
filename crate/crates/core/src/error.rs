use thiserror::Error;

use crate::periodic::expr::ParseError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a convex body needs at least 3 non-collinear vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex coordinates must be finite")]
    NonFinite,
    #[error("origin is not strictly interior (edge margin {margin:e})")]
    OriginNotInterior { margin: f64 },
    #[error("body is not centrally symmetric")]
    NotSymmetric,
    #[error("polygon vertices are not all integer points")]
    NotLatticePolygon,
    #[error("lattice basis is degenerate (|det| = {0:e})")]
    DegenerateLattice(f64),
    #[error("polygon is already a parallelogram")]
    AlreadyParallelogram,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("{name} = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("search patch too small: path not certified with padding {pad} (cap {cap})")]
    PatchTooSmall { pad: usize, cap: usize },
    #[error("reduction did not terminate within {0} steps")]
    NoTermination(usize),
    #[error("invalid metric field: {0}")]
    InvalidField(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
