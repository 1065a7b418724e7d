use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Parse failure or wrong column count; `location` is `file:line`.
    #[error("{location}: {message}")]
    MalformedFile { location: String, message: String },

    #[error("{location}: timestamp {t} is not strictly greater than the previous one")]
    NonMonotoneTimestamps { location: String, t: f64 },

    #[error("{location}: gaze value {value} outside [0, 1]")]
    GazeOutOfRange { location: String, value: f64 },

    #[error("series `{0}` has too few present samples")]
    EmptySeries(String),

    #[error("overlap of {available:.3} s is shorter than the required {required:.3} s")]
    InsufficientOverlap { required: f64, available: f64 },

    #[error("series `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("series `{0}` is not uniformly sampled")]
    NonUniformSeries(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("calibration segment `{segment}` has {present} present samples, need at least {required}")]
    InsufficientCalibration {
        segment: String,
        present: usize,
        required: usize,
    },

    #[error("inverted calibration: near {near} dBm must exceed far {far} dBm by more than 2 x {margin} dB")]
    InvertedCalibration { near: f64, far: f64, margin: f64 },

    #[error("gaze sample ({x}, {y}) outside the unit square")]
    OutOfRange { x: f64, y: f64 },

    #[error("entropy window is empty")]
    EmptyWindow,

    #[error("entropy series has no present values")]
    AllMissing,

    #[error("no `phase:` markers found")]
    NoPhaseMarkers,

    #[error("phase `{0}` contains no grid samples")]
    EmptyInterval(String),

    #[error("render time range is empty")]
    EmptyRange,

    #[error("no `sync` marker segment found")]
    NoSyncSegment,

    #[error("no calibration source: add calib_near/calib_far markers or configure [calibration] ranges")]
    NoCalibrationSource,

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
