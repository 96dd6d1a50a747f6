use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two objects built over different groups (or different sides) were combined.
    #[error("operands belong to different groups or sides")]
    GroupMismatch,

    /// A translation left the stored range of a truncated model.
    #[error("translation leaves the truncated range")]
    OutOfRange,

    /// A metric was requested on a group kind it is not defined for.
    #[error("metric `{metric}` is not defined for this group kind")]
    MetricDomain { metric: &'static str },

    /// Generic invalid argument with context.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// A matrix failed a structural requirement (shape, hermiticity, positivity, trace).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    /// Distribution weights were negative or did not normalize.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The iterative eigensolver did not reach the requested residual.
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A discretization failed its self-consistency refinement check.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// The requested parameter branch has no implemented method.
    #[error("unsupported branch: {0}")]
    Unsupported(String),

    /// The linear program for a transport distance could not be solved.
    #[error("transport LP failed: {0}")]
    Transport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
