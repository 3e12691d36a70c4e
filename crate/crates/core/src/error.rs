use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic bytes {found:02x?}, expected {expected:02x?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("row {row}: event ({x}, {y}) outside {width}x{height} sensor")]
    OutOfBounds {
        row: usize,
        x: u64,
        y: u64,
        width: u32,
        height: u32,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("need at least 2 intensity frames, got {0}")]
    TooFewFrames(usize),

    #[error("stream has empty duration")]
    EmptyDuration,

    #[error("all event counts are zero; density is undefined")]
    DegenerateDensity,

    #[error("AUC needs both positive and negative labels")]
    SingleClass,

    #[error("ground truth has no box on anomalous frame {0}")]
    MissingGroundTruth(usize),

    #[error("missing teacher outputs: {0}")]
    MissingTeacher(String),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Row {
            row,
            message: e.to_string(),
        }
    }
}

impl Error {
    /// Short stable name of the variant, for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::BadMagic { .. } => "bad_magic",
            Error::Truncated(_) => "truncated",
            Error::ChecksumMismatch { .. } => "checksum_mismatch",
            Error::Row { .. } => "row",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::TooFewFrames(_) => "too_few_frames",
            Error::EmptyDuration => "empty_duration",
            Error::DegenerateDensity => "degenerate_density",
            Error::SingleClass => "single_class",
            Error::MissingGroundTruth(_) => "missing_ground_truth",
            Error::MissingTeacher(_) => "missing_teacher",
            Error::MissingInput(_) => "missing_input",
            Error::Parse(_) => "parse",
        }
    }
}
