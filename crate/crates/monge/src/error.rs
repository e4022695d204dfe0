use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A symmetric matrix fails the J-invariance test beyond tolerance.
    #[error("matrix is not J-invariant (relative deviation {deviation:.3e})")]
    NotJInvariant { deviation: f64 },

    /// A metric that must be positive definite is not.
    #[error("metric is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    MetricNotPositive { min_eigenvalue: f64 },

    /// A symmetric-function index is outside its admissible range.
    #[error("index {index} out of range [{lo}, {hi}]")]
    IndexOutOfRange { index: i64, lo: i64, hi: i64 },

    /// An operator was evaluated outside its admissible neighborhood.
    #[error("matrix argument left the admissible domain: {reason}")]
    OutsideDomain { reason: String },

    /// Manufactured data is inadmissible at some grid point.
    #[error("data not admissible at grid point {point:?}: {reason}")]
    NotAdmissible { point: Vec<usize>, reason: String },

    /// The envelope optimizer hit its iteration cap without meeting tolerance.
    #[error("envelope optimizer diverged: {detail}")]
    OptimizerDiverged { detail: String },

    /// Newton damping could not find an acceptable step.
    #[error("line search failed at iteration {iteration} (residual {residual:.3e})")]
    LineSearchFailed { iteration: usize, residual: f64 },

    /// Newton ran out of iterations.
    #[error("no convergence after {max_iter} iterations (residual {residual:.3e})")]
    MaxIterations { max_iter: usize, residual: f64 },

    /// A polynomial fit was requested on too small a point set.
    #[error("only {points} lattice points in ball of radius {radius}, need at least {needed}")]
    TooFewPoints {
        points: usize,
        needed: usize,
        radius: f64,
    },

    /// Invalid configuration (CLI flags, experiment files, spec parameters).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
