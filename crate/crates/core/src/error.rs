use thiserror::Error;

/// Errors raised across the generator, polynomial lab and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported field width {0} (expected one of 4, 8, 16, 32, 64)")]
    UnsupportedWidth(u32),

    #[error("seed has {actual} bits, expected {expected}")]
    SeedLength { expected: u64, actual: u64 },

    #[error("position {index} does not fit in a {width}-bit field element")]
    PositionOverflow { index: u64, width: u32 },

    #[error("precision of {precision} bits exceeds field width {width}")]
    Precision { precision: u32, width: u32 },

    #[error("value outside the domain: {0}")]
    Domain(String),

    #[error("coordinate {index} out of range for dimension {dim}")]
    Coordinate { index: usize, dim: usize },

    #[error("discretization too coarse: delta = {delta} >= 1 for M = {precision}")]
    TooCoarse { precision: u32, delta: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error(
        "required precision M = {required} bits exceeds the {cap}-bit field; \
         override M or acknowledge the capped precision"
    )]
    InfeasiblePrecision { required: u32, cap: u32 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("degree {degree} exceeds the supported cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
