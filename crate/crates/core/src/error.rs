//! Error type shared by all solver layers.

/// Errors produced by the numerics, solver, and oracle layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is outside the documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method exhausted its budget without meeting its tolerance.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    /// Bracket expansion failed to find a sign change.
    #[error("no sign change found while expanding bracket to [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// The requested divergence is infinite for the given pair of distributions.
    #[error("divergence is infinite: {0}")]
    InfiniteDivergence(String),

    /// A tabulated-density file could not be parsed.
    #[error("table parse error at line {line}: {message}")]
    TableParse { line: usize, message: String },

    /// A discretization grid truncates too much nominal probability mass.
    #[error("insufficient grid coverage: truncated mass {truncated:.3e} exceeds {limit:.1e}")]
    InsufficientCoverage { truncated: f64, limit: f64 },

    /// Two grid distributions that must share a support grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Underlying I/O failure (tabulated-density loading).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
