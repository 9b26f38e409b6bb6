use thiserror::Error;

/// Errors surfaced by the simulation and learning primitives.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A fire front degenerated (all candidate points collinear).
    #[error("malformed fire front: {0}")]
    MalformedFront(String),

    /// An operation that needs a burning perimeter was given an empty density.
    #[error("density grid has no positive support")]
    NoFire,

    /// Two radio endpoints coincide; pathloss is undefined.
    #[error("degenerate geometry: coincident positions")]
    DegenerateGeometry,

    /// A fixed-point iteration ran out of its iteration budget.
    #[error("fixed point did not converge: residual {residual:.3e} after {iterations} iterations")]
    ConvergenceFailure { residual: f64, iterations: usize },

    /// Vector/matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Non-finite value where a finite one is required.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// A configuration value violates its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Model or table file could not be parsed.
    #[error("bad file format: {0}")]
    BadFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
