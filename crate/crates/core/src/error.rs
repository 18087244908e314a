use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("nesting order {index} has non-positive side length {length_mm} mm")]
    NonPositiveLength { index: usize, length_mm: f64 },

    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),

    #[error("model has no solid surface")]
    EmptyModel,

    #[error("voxel grid contains no solid material")]
    NoSolid,

    #[error("linear solve did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("non-positive data: {0}")]
    NonPositiveData(String),

    #[error("target relative density {target} outside [{low}, {high}] reachable in the diameter bracket")]
    Unbracketed { target: f64, low: f64, high: f64 },

    #[error("no diameter reaches relative density {target} within {tol}; closest was {best_rho} at d = {best_diameter_mm} mm")]
    DensityNotReached {
        target: f64,
        tol: f64,
        best_diameter_mm: f64,
        best_rho: f64,
    },

    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
