use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: asymmetry {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("matrix is not skew-symmetric: asymmetry {deviation:e}")]
    NotSkew { deviation: f64 },
    #[error("Pfaffian of an odd-dimensional ({0}x{0}) matrix is undefined")]
    OddDimension(usize),
    #[error("coordinates are not ordered at index {index}")]
    NotOrdered { index: usize },
    #[error("coordinates are not strictly ordered at index {index}")]
    NotStrictlyOrdered { index: usize },
    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid time window: {0}")]
    TimeWindow(String),
    #[error("quadrature for N={0} is not supported (N must be at most {1})")]
    QuadratureDimension(usize, usize),
    #[error("quadrature did not converge: last relative change {rel_change:e}")]
    Nonconvergent { rel_change: f64 },
    #[error("time grid is invalid: {0}")]
    Grid(String),
    #[error("missing horizon values: the grid must end at T={0}")]
    MissingEndpoint(f64),
    #[error("replicate failed at t={time}: step rejected after {halvings} halvings")]
    ReplicateFailed { time: f64, halvings: u32 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
