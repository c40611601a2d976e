//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite phase")]
    NonFinitePhase,

    #[error("grid dimensions must be at least 1x1, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("value count {got} does not match {width}x{height} = {expected}")]
    ValueCountMismatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("unsupported magic: expected {expected:?}, found {found:?}")]
    UnsupportedMagic { expected: String, found: String },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {got}")]
    TruncatedPayload { expected: usize, got: usize },

    #[error("payload size mismatch vs header: expected {expected} bytes, found {got}")]
    PayloadSizeMismatch { expected: usize, got: usize },

    #[error("sample {value} out of range for maxval {maxval} at pixel ({x}, {y})")]
    SampleOutOfRange {
        value: f64,
        maxval: u16,
        x: usize,
        y: usize,
    },

    #[error("non-finite value at valid pixel ({x}, {y})")]
    NonFiniteAtValidPixel { x: usize, y: usize },

    #[error("height {height} mm exceeds standoff {standoff} mm")]
    HeightExceedsStandoff { height: f64, standoff: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid seed pixel ({x}, {y})")]
    InvalidSeedPixel { x: usize, y: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("empty valid set")]
    EmptyValidSet,

    #[error("minimum phase missing under valid object pixel ({x}, {y})")]
    MissingMinPhase { x: usize, y: usize },

    #[error("denominator not positive at pixel ({x}, {y})")]
    NonPositiveDenominator { x: usize, y: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

/// Parameter must be finite and strictly positive.
pub(crate) fn require_positive(value: f64, what: &str) -> Result<()> {
    let ok = value.is_finite() && value > 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

/// Parameter must be finite and non-negative.
pub(crate) fn require_non_negative(value: f64, what: &str) -> Result<()> {
    let ok = value.is_finite() && value >= 0.0;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!(
            "{what} must be non-negative and finite, got {value}"
        )))
    }
}
