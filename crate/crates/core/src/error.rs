use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Matrix or frame dimensions do not agree with what the operation needs.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A NaN or infinity was passed where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Channel matrix without full column rank (|R_kk| below threshold).
    #[error("degenerate channel: |R[{index}][{index}]| = {magnitude:e}")]
    DegenerateChannel { index: usize, magnitude: f64 },

    /// A frame was handed to an operation expecting another codec stage.
    #[error("wrong frame stage: expected {expected:?}, found {found:?}")]
    Stage {
        expected: crate::fec::Stage,
        found: crate::fec::Stage,
    },

    /// Parameter outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
