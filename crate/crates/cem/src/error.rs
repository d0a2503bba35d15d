//! Error type shared across the crate.

/// Failure cases surfaced to callers. Construction errors carry enough text
/// to identify the offending input; numerical errors name the stage that
/// detected them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid material data: {0}")]
    Material(String),

    #[error("invalid boundary data: {0}")]
    Boundary(String),

    #[error("raster medium: {0}")]
    Raster(String),

    #[error("matrix not positive definite: {0}")]
    NotSpd(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
