use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("kernel: {0}")]
    Kernel(String),
    #[error("no convergence after {iters} iterations (relative residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("energy increased at iteration {iter} even at the smallest step; reduce dt")]
    EnergyIncrease { iter: usize },
    #[error("field collapsed to zero")]
    Collapse,
    #[error("support clipped: {0}")]
    Clipped(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("file format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Grid(_)
                | Error::GridMismatch(_)
                | Error::Param(_)
                | Error::Config(_)
                | Error::Format(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
