use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid video format: {0}")]
    InvalidFormat(String),

    #[error("invalid plane: {0}")]
    InvalidPlane(String),

    #[error("truncated input: frame {frame} needs {expected} bytes, only {available} available")]
    Truncated {
        frame: usize,
        expected: usize,
        available: usize,
    },

    #[error("sample value {value} does not fit in {bit_depth} bits")]
    SampleOutOfRange { value: u16, bit_depth: u8 },

    #[error("invalid CU size {0}: must be one of 16, 32 or 64")]
    InvalidCuSize(u32),

    #[error("empty block: statistics need at least one sample")]
    EmptyBlock,

    #[error("invalid QP configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("invalid RD curve: {0}")]
    InvalidCurve(String),

    #[error("degenerate polynomial fit: {0}")]
    DegenerateFit(String),

    #[error("RD curves do not overlap (interval {lo} .. {hi})")]
    NoOverlap { lo: f64, hi: f64 },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("serialization failed: {0}")]
    Serialize(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            }
        } else {
            Error::Csv(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Serialize(e.to_string())
        }
    }
}
