use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("grid must have an even number of points >= 8, got {0}")]
    BadPointCount(usize),
    #[error("box length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("fractional order must be nonnegative and finite, got {0}")]
    BadOrder(f64),
    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),
    #[error("operation requires a real-valued field")]
    ComplexField,
    #[error("field has zero norm where a nonzero one is required")]
    ZeroNorm,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
