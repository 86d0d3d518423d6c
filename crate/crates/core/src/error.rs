use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Positions are degenerate (coincident points, reactive zone, wrong side of a surface).
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Sizes of two inputs do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// An experiment or codebook configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$kind(format!($($arg)+)));
        }
    };
}

pub(crate) use ensure;
