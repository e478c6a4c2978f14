use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polynomial degree {0} (must be at least 1)")]
    InvalidDegree(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("quadrature rule failed validation: {0}")]
    QuadratureValidation(String),

    #[error("mesh degeneration in element {element}: |F'| = {jacobian:e} at xi = {xi}")]
    MeshDegeneration {
        element: usize,
        xi: f64,
        jacobian: f64,
    },

    #[error("degenerate averaged normal at node {node} (|n| = {magnitude:e})")]
    DegenerateNormal { node: usize, magnitude: f64 },

    #[error("singular system: pivot {pivot:e} at row {row} below threshold {threshold:e}")]
    SingularSystem {
        row: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    InaccurateSolve { residual: f64, tolerance: f64 },

    #[error("velocity field undefined at ({x}, {y})")]
    FieldDomain { x: f64, y: f64 },

    #[error("point ({x}, {y}) lies outside the retraction tube (distance {distance} >= {tube})")]
    ProjectionDomain {
        x: f64,
        y: f64,
        distance: f64,
        tube: f64,
    },

    #[error("closest-point projection did not converge for ({x}, {y})")]
    NonConvergence { x: f64, y: f64 },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, skipping any `StepFailed` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::StepFailed { source, .. } => source.root(),
            other => other,
        }
    }
}
