use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("fixation set is empty")]
    EmptyFixations,
    #[error("shuffled negative pool is empty")]
    EmptyNegatives,
    #[error("every pixel is fixated, no negatives left")]
    AllFixated,
    #[error("fixation ({row}, {col}) outside {height}x{width} map")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("map has zero total mass")]
    ZeroMass,
    #[error("sequence lengths differ: {0}")]
    LengthMismatch(String),
    #[error("grouping references unknown video '{0}'")]
    UnknownVideo(String),

    #[error("empty sequence")]
    EmptySequence,
    #[error("forward cache is missing or does not match the model")]
    StaleCache,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training failed in video '{video}' window starting at frame {start}: {source}")]
    Training {
        video: String,
        start: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("bad PGM header in {path}: {reason}")]
    BadHeader { path: PathBuf, reason: String },
    #[error("truncated PGM data in {0}")]
    TruncatedData(PathBuf),
    #[error("unsupported PGM maxval {maxval} in {path} (only 255)")]
    UnsupportedDepth { path: PathBuf, maxval: u32 },
    #[error("map value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: fixation ({row}, {col}) outside {height}x{width} frame")]
    FixationOutOfBounds {
        path: PathBuf,
        line: usize,
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("missing prediction for video '{video}' frame {frame}")]
    MissingPrediction { video: String, frame: u64 },
    #[error("missing input: {0}")]
    MissingInput(PathBuf),
    #[error("score files disagree on videos: {0}")]
    InconsistentVideos(String),
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI's `ERROR <code>:` lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidTensor(_) => "InvalidTensor",
            Error::EmptyFixations => "EmptyFixations",
            Error::EmptyNegatives => "EmptyNegatives",
            Error::AllFixated => "AllFixated",
            Error::OutOfBounds { .. } => "OutOfBounds",
            Error::ZeroMass => "ZeroMass",
            Error::LengthMismatch(_) => "LengthMismatch",
            Error::UnknownVideo(_) => "UnknownVideo",
            Error::EmptySequence => "EmptySequence",
            Error::StaleCache => "StaleCache",
            Error::EmptyDataset => "EmptyDataset",
            Error::Training { source, .. } => source.code(),
            Error::CorruptCheckpoint(_) => "CorruptCheckpoint",
            Error::BadHeader { .. } => "BadHeader",
            Error::TruncatedData(_) => "TruncatedData",
            Error::UnsupportedDepth { .. } => "UnsupportedDepth",
            Error::OutOfRange(_) => "OutOfRange",
            Error::Parse { .. } => "ParseError",
            Error::FixationOutOfBounds { .. } => "OutOfBounds",
            Error::Manifest(_) => "Manifest",
            Error::MissingPrediction { .. } => "MissingPrediction",
            Error::MissingInput(_) => "MissingInput",
            Error::InconsistentVideos(_) => "InconsistentVideos",
            Error::Config(_) => "Config",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "Json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
