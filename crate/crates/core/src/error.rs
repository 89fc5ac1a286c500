use thiserror::Error;

use crate::elliptic::SolveStats;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain/grid construction problems (inclusion outside Ω, too coarse, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Invalid parameter values (a ≤ 0, ω outside (0,2), ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Degenerate pinning value a = 1 rejected without the explicit opt-in flag.
    #[error("degenerate pinning a = 1 requires the allow_degenerate flag")]
    DegeneratePinning,

    /// An iterative solver ran out of its iteration budget.
    #[error("solver failed to converge: {context} (iters {}, residual {:.3e})", stats.iterations, stats.residual)]
    Convergence { context: String, stats: SolveStats },

    /// Grid too coarse for the requested computation (e.g. h > ε/2).
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A series or sum failed its convergence check.
    #[error("series does not converge: {0}")]
    SeriesDivergence(String),

    /// NaN/Inf appeared, a step size underflowed, or similar numeric failure.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Two objects built on different grids were mixed.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
