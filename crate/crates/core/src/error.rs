use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two marked points coincide more closely than the evaluators tolerate.
    #[error("coincident or nearly coincident points: {0}")]
    CoincidentPoints(String),

    /// An interval, rectangle, or point set fails a geometric precondition.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A lattice path violates adjacency or domain membership.
    #[error("invalid lattice path: {0}")]
    InvalidPath(String),

    /// A random walk exceeded the hard step cap without exiting.
    #[error("walk exceeded step cap of {cap} steps")]
    StepCapExceeded { cap: u64 },

    /// An iterative linear solve stalled above the requested residual.
    #[error("linear solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDidNotConverge { residual: f64, iterations: usize },

    /// A quadrature rule could not reach the requested tolerance.
    #[error("quadrature did not converge: estimated error {error:.3e}")]
    QuadratureDidNotConverge { error: f64 },

    /// An estimator received no usable samples.
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    /// A series or ensemble sum diverges for the requested parameters.
    #[error("divergent sum: {0}")]
    Divergent(String),

    /// A tracked point was absorbed by the growing hull before the requested time.
    #[error("point swallowed by the hull at t = {time:.6}")]
    PointSwallowed { time: f64 },

    /// A Loewner integration or extraction step failed.
    #[error("loewner evolution error: {0}")]
    Loewner(String),

    /// A configuration document is malformed or inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
