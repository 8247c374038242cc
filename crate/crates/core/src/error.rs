use thiserror::Error;

/// Errors surfaced by field construction, geometry checks and solvers.
#[derive(Debug, Error)]
pub enum DhError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("zero vector at site ({i}, {j}): cannot project to the sphere")]
    ZeroVector { i: usize, j: usize },

    #[error("sphere constraint violated: max |1 - |phi|| = {defect:.3e} at site ({i}, {j})")]
    OffSphere { defect: f64, i: usize, j: usize },

    #[error("tangency violated: |sum phi^i psi^i| = {defect:.3e} at site ({i}, {j})")]
    TangencyViolation { defect: f64, i: usize, j: usize },

    #[error("{context}: vector is not tangent (|<v, p>| = {defect:.3e})")]
    NotTangent { context: &'static str, defect: f64 },

    #[error("{context}: vector is not normal (|v - <v,p>p| = {defect:.3e})")]
    NotNormal { context: &'static str, defect: f64 },

    #[error("operation requires torus topology, got rectangle")]
    UnsupportedTopology,

    #[error("target dimension n = {0} not supported here (need n = 2)")]
    UnsupportedTarget(usize),

    #[error("rescale factor must be positive, got {0}")]
    BadScale(f64),

    #[error("bubble scale lambda = {lambda} under-resolved (need lambda > 2h = {floor}) at index {index}")]
    UnderResolved { lambda: f64, floor: f64, index: usize },

    #[error("geometry: {0}")]
    BadGeometry(String),

    #[error("solver diverged at iteration {iter}: e_map = {e_map:.3e} exceeds 10x initial {initial:.3e}")]
    Diverged { iter: usize, e_map: f64, initial: f64 },

    #[error("mean of Poisson right-hand side is {mean:.3e}, beyond tolerance {tol:.3e} for entry ({m}, {i})")]
    NonZeroMean { mean: f64, tol: f64, m: usize, i: usize },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DhError>;
