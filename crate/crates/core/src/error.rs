use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {format} input at {location}: {message}")]
    Parse {
        format: &'static str,
        location: String,
        message: String,
    },

    #[error("unsupported mesh format for {0}")]
    UnsupportedFormat(PathBuf),

    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: u32, count: usize },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("mesh bounding box has zero extent on every axis")]
    DegenerateBounds,

    #[error("every face of the mesh is degenerate")]
    AllFacesDegenerate,

    #[error("vertex {index} at ({x}, {y}, {z}) lies outside [-1, 1]^3; normalize the mesh first")]
    OutOfDomain { index: usize, x: f64, y: f64, z: f64 },

    #[error("invalid grid resolution {0}; expected 2..=4096")]
    InvalidResolution(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ill-posed anchor system (singular normal equations with lambda = 0)")]
    IllPosed,

    #[error("not an FCT file (bad magic {0:?})")]
    BadMagic([u8; 4]),

    #[error("unsupported FCT format version {found}; this build reads version {expected}")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("truncated FCT payload: needed {needed} bytes, found {available}")]
    Truncated { needed: usize, available: usize },

    #[error("FCT checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("malformed FCT payload: {0}")]
    MalformedPayload(String),

    #[error("transform matrix is singular")]
    SingularTransform,

    #[error("grid mismatch: {0} vs {1}")]
    ResolutionMismatch(u32, u32),

    #[error("mesh has no {0} attribute")]
    MissingAttribute(&'static str),

    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),

    #[error("token with linear index {0} has no label")]
    UnlabeledToken(u64),

    #[error("degenerate input for metrics: {0}")]
    DegenerateMetricsInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        format: &'static str,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            format,
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by reading or writing files (including
    /// malformed file contents) as opposed to failures of the computation.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::UnsupportedFormat(_)
                | Error::BadMagic(_)
                | Error::VersionMismatch { .. }
                | Error::Truncated { .. }
                | Error::ChecksumMismatch { .. }
                | Error::MalformedPayload(_)
        )
    }
}
