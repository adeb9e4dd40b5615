//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires a nonzero field: {0}")]
    ZeroField(&'static str),

    #[error("density field must be real valued (max |Im| = {max_imag:e}, limit {limit:e})")]
    ComplexDensity { max_imag: f64, limit: f64 },

    #[error("Riesz exponent theta must lie in (0, 2), got {0}")]
    ThetaOutOfRange(f64),

    #[error("grid too large for the direct summation path: n = {n}, limit {limit}")]
    GridTooLarge { n: usize, limit: usize },

    #[error("profile under-resolved: width {width:e} outside [{min:e}, {max:e}] on spacing {spacing:e}")]
    ResolutionGuard {
        width: f64,
        min: f64,
        max: f64,
        spacing: f64,
    },

    #[error("bad magic bytes in field file (expected \"QFLD\")")]
    BadMagic,

    #[error("unsupported field file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated or corrupt field payload: {0}")]
    TruncatedPayload(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
