use thiserror::Error;

/// Errors raised by the calculus-of-currents operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree overflow: degree {degree} exceeds ambient dimension {ambient}")]
    DegreeOverflow { degree: usize, ambient: usize },

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires degree at least 1")]
    DegreeZero,

    #[error("invalid multi-index {0:?}")]
    InvalidMultiIndex(Vec<usize>),

    #[error("point {point:?} lies outside the domain")]
    DomainEscape { point: Vec<f64> },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("degenerate simplex (volume {volume:e})")]
    DegenerateSimplex { volume: f64 },

    #[error("{count} image simplices collapsed under the map")]
    DegenerateImage { count: usize },

    #[error("chain cell {cell:?} is not a face of the complex")]
    ChainNotSupported { cell: Vec<usize> },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("empty test family")]
    EmptyFamily,

    #[error("map is not injective at sampling resolution (lower constant {lower:e})")]
    NotInjective { lower: f64 },

    #[error("inverse map iteration failed at {point:?}")]
    InversionFailed { point: Vec<f64> },

    #[error("time {t} lies outside the motion interval [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("integrator step rejected: local error {error:e} exceeds {bound:e}")]
    StepRejected { error: f64, bound: f64 },

    #[error("balance residual {residual:e} exceeds {bound:e}")]
    BalanceResidual { residual: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
