use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series `{0}` is empty")]
    EmptySeries(String),
    #[error("series `{id}` has a non-finite sample at index {index}")]
    NonFiniteSample { id: String, index: usize },
    #[error("mask is {mask_rows}x{mask_cols} but the lattice is {rows}x{cols}")]
    MaskDimensionMismatch {
        rows: usize,
        cols: usize,
        mask_rows: usize,
        mask_cols: usize,
    },
    #[error("brute-force enumeration limited to lengths <= {limit}, got {rows}x{cols}")]
    InstanceTooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },
    #[error("DTW result is infeasible (no allowed path)")]
    InfeasibleResult,
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("path position ({row}, {col}) outside {rows}x{cols} lattice")]
    PathOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("invalid warping path: {0}")]
    InvalidPath(String),
    #[error("window {window} too large: shortest training path has {shortest} positions")]
    WindowTooLarge { window: usize, shortest: usize },
    #[error("window must be at least 1")]
    InvalidWindow,
    #[error("no paths pass through ({row}, {col})")]
    DivisionByZeroCount { row: usize, col: usize },
    #[error("invalid uncertainty band [{low}, {high}]")]
    InvalidBand { low: f64, high: f64 },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("representative group is empty")]
    EmptyGroup,
    #[error("series `{0}` is not labeled normal")]
    NotNormal(String),
    #[error("series `{0}` has no label")]
    UnlabeledSeries(String),
    #[error("unsupported model document version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u64 },
    #[error("malformed model document: {0}")]
    MalformedDocument(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: unknown label `{token}`")]
    UnknownLabelToken { line: usize, token: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model set is empty")]
    EmptyModelSet,
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
