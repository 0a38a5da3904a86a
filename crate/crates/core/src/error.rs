use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("mesh has no vertices or no faces")]
    EmptyMesh,

    #[error("face {face} is invalid: {reason}")]
    InvalidFace { face: usize, reason: String },

    #[error("face {0} has zero area")]
    DegenerateFace(usize),

    #[error("vector is parallel to the face normal, tangent direction undefined")]
    UndefinedDirection,

    #[error("invalid surface point: {0}")]
    InvalidSurfacePoint(String),

    #[error("target is unreachable from the source (disconnected component)")]
    Unreachable,

    #[error("exponential map reached the mesh boundary at face {face} with {residual:.3e} m left")]
    GeodesicLeftSurface { face: usize, residual: f64 },

    #[error("exponential map did not terminate after {steps} steps")]
    NonTermination { steps: usize },

    #[error("local frame undefined: velocity norm {norm:.3e} is too small")]
    DegenerateFrame { norm: f64 },

    #[error("sample {index} lies {distance:.3e} m from the mesh (limit {limit:.3e} m)")]
    OffSurfaceSample {
        index: usize,
        distance: f64,
        limit: f64,
    },

    #[error("fit failed at sample {index}: {reason}")]
    Fit { index: usize, reason: String },

    #[error("singular metric at ({u:.6}, {v:.6})")]
    SingularMetric { u: f64, v: f64 },

    #[error("curve left the parameter domain at ({u:.6}, {v:.6})")]
    OutOfDomain { u: f64, v: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input files rather than by the
    /// geometry or the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Parse { .. } | Error::Serde(_) | Error::Csv(_)
        )
    }
}
