use thiserror::Error;

/// Errors produced by the mesh, finite-element, projection, linear-algebra
/// and DMD layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid refinement plan: {0}")]
    InvalidPlan(String),

    #[error("point {point:?} is outside the mesh")]
    NotFound { point: Vec<f64> },

    #[error("assembly failed on element {element}: {reason}")]
    Assembly { element: usize, reason: String },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("{} quadrature point(s) not covered by the donor mesh, first at {:?}", .points.len(), .points.first())]
    Coverage { points: Vec<Vec<f64>> },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("DMD fit failed: {0}")]
    Fit(String),

    #[error("time step failed at t = {time}: {reason}")]
    Step { time: f64, reason: String },

    #[error("threshold region is empty")]
    UndefinedRegion,

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("snapshot {index}: {source}")]
    InSnapshot { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The innermost error, skipping snapshot context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InSnapshot { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
