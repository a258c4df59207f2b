use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-uniform sampling: gap {gap} at row {row} deviates from spacing {spacing}")]
    NonUniformSampling { row: usize, gap: f64, spacing: f64 },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-finite value at row {row}, column `{column}`")]
    NonFiniteValue { row: usize, column: String },

    #[error("overlapping events: [{0}, {1}] and [{2}, {3}]")]
    OverlappingEvents(f64, f64, f64, f64),

    #[error("inverted interval: start {start} > end {end}")]
    InvertedInterval { start: f64, end: f64 },

    #[error("event duration {actual} does not match partition duration {expected}")]
    DurationMismatch { actual: f64, expected: f64 },

    #[error("window size {w} exceeds series length {n}")]
    WindowTooLarge { w: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("cannot place {n_events} events with minimum gap {min_gap} in the series")]
    InfeasiblePlacement { n_events: usize, min_gap: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than I/O or numerics.
    /// Malformed CSV content counts as invalid input.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::NonFiniteLoss { .. } | Error::Io(_) => false,
            Error::Csv(e) => !matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
