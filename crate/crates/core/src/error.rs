use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A feasibility bound between configuration values is violated.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("mode ({m}, {n}) has no representative in the index set within the shift search bound")]
    Canonicalize { m: i64, n: i64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("fence {fence} lies within {margin:e} of eigenvalue {eigenvalue}")]
    FenceTooClose {
        fence: f64,
        eigenvalue: f64,
        margin: f64,
    },

    #[error("inertia margin violated: quadratic form eigenvalue {value} (|value| < {threshold})")]
    InertiaMargin { value: f64, threshold: f64 },

    #[error("partition refinement depth exceeded on [{t_lo}, {t_hi}]: spectral gap collapse")]
    PlanDepthExceeded { t_lo: f64, t_hi: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector has no valley weights")]
    ZeroVector,

    #[error("final flux {0} is not an integer number of flux quanta")]
    NonIntegerFlux(f64),

    #[error("family is not tame: worst commutator norm {worst_epsilon} >= 1/4")]
    NotTame { worst_epsilon: f64 },

    #[error("convergence anomaly: {0}")]
    Convergence(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
