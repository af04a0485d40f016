use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// `E` is (numerically) an eigenvalue of the finite restriction.
    #[error("singular system: relative pivot {pivot:e} at row {row} below threshold")]
    Singular { row: usize, pivot: f64 },

    #[error("small divisor |e^(2 pi i alpha k) - 1| = {divisor:e} at k = {k}")]
    SmallDivisor { k: i64, divisor: f64 },

    #[error("continued fraction too shallow: {0}; deepen expansion")]
    DeepenExpansion(String),

    #[error("discriminant decomposition failed: residual {residual:e} exceeds {tolerance:e}")]
    Decomposition { residual: f64, tolerance: f64 },

    #[error("band edge count {found} does not match 2q = {expected}")]
    RootCount { found: usize, expected: usize },

    #[error("decay fit refused: only {usable} usable points (need {needed})")]
    FitRefused { usable: usize, needed: usize },

    #[error("insufficient decay at window edge: tail ratio {tail:e}")]
    InsufficientDecay { tail: f64 },

    #[error("vanishing vector field: min |v|^2 = {min_d:e}")]
    VanishingField { min_d: f64 },

    #[error("intertwining relation violated: residual {0:e}")]
    Intertwining(f64),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
