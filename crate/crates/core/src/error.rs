use std::path::PathBuf;

/// Errors raised by the measurement, filtering and calibration routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("probe plane does not cut the mesh ({hits} hits, need at least 3)")]
    NoSection { hits: usize },

    #[error("operation requires an organized (grid) point cloud")]
    NotOrganized,

    #[error("insufficient points: {0}")]
    InsufficientPoints(String),

    #[error("invalid marker capture: {0}")]
    InvalidCapture(String),

    #[error("marker fit did not converge after {iterations} iterations (residual {residual_cm:.3} cm)")]
    NonConvergent { iterations: usize, residual_cm: f64 },

    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("no consensus: best inlier set has {best} correspondences")]
    NoConsensus { best: usize },

    #[error("camera {camera} has insufficient marker correspondences ({shared} shared positions)")]
    InsufficientCorrespondence { camera: u32, shared: usize },

    #[error("unknown camera id {0}")]
    UnknownCamera(u32),

    #[error("unknown rig preset {0:?}")]
    UnknownPreset(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
