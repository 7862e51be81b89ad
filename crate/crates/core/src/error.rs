use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shooting bracket did not converge: {0}")]
    BracketNotConverged(String),

    #[error("overflow while integrating the radial equation at s = {s}")]
    ShootingOverflow { s: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("coupling outside the admissible range: {0}")]
    InadmissibleCoupling(String),

    #[error("no analytic candidate within tolerance: {0}")]
    UnresolvedNormalization(String),

    #[error("no critical point: {0}")]
    NoCriticalPoint(String),

    #[error("solver diverged after {iterations} iterations: {reason}")]
    Diverged { iterations: usize, reason: String },

    #[error("singular jacobian at ({0})")]
    SingularJacobian(String),

    #[error("fixed-point map left the window at iterate {iterate}: {reason}")]
    MapLeftWindow { iterate: usize, reason: String },

    #[error("fixed-point map is not contracting near iterate {0}")]
    NotContracting(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config constraint violated: {0}")]
    Constraint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
