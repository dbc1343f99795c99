use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("speed value {value} at node {index} violates 1/M < c < M with M = {bound}")]
    SpeedOutOfBounds { index: usize, value: f64, bound: f64 },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape does not fit in the grid with a margin of {margin}: {detail}")]
    ShapeOutsideGrid { margin: f64, detail: String },

    #[error("arc [{start}, {end}] is not a sub-interval of the boundary parameter range [0, 1]")]
    InvalidArc { start: f64, end: f64 },

    #[error("bump {index} comes within {clearance} of the boundary (needs at least {required})")]
    BumpOutsideDomain { index: usize, clearance: f64, required: f64 },

    #[error("{0}: inputs live on different grids")]
    GridMismatch(&'static str),

    #[error("patch was built for a different region")]
    PatchMismatch,

    #[error("source set is empty")]
    EmptySource,

    #[error("every source lies inside the obstacle")]
    SourceInsideObstacle,

    #[error("point ({0}, {1}) lies outside the grid")]
    OutsideGrid(f64, f64),

    #[error("point ({0}, {1}) lies inside the region")]
    InsideRegion(f64, f64),

    #[error("path needs at least two points, got {0}")]
    PathTooShort(usize),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("detector patch is empty")]
    EmptyPatch,

    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value in the wave field at step {step}")]
    BlowUp { step: usize },

    #[error("covector (xi, tau) is zero")]
    ZeroCovector,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("discretisation mismatch: {0}")]
    Discretization(String),

    #[error(
        "Landweber residual grew for {consecutive} consecutive iterations (at iteration \
         {iteration}, residual {residual:e}); reduce the step size below {step_size:e}"
    )]
    Divergence { iteration: usize, consecutive: usize, residual: f64, step_size: f64 },

    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
