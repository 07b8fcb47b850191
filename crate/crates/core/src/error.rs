use std::path::PathBuf;

use num_complex::Complex64;

use crate::solver::SolveReport;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("mesh topology error: {0}")]
    Topology(String),
    #[error("boundary tag error: {0}")]
    Tag(String),
    #[error("supersonic flow: |M| = {mach:.6} at ({:.4}, {:.4}, {:.4})", .point[0], .point[1], .point[2])]
    Supersonic { mach: f64, point: [f64; 3] },
    #[error("point outside the flow model domain: {0}")]
    Domain(String),
    #[error("size mismatch: expected {expected} rows, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("degenerate surface triangle {0}")]
    DegenerateFace(usize),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("{} evaluation point(s) too close to the coupling surface (first: {:?})", .points.len(), .points.first())]
    NearSurface { points: Vec<usize> },
    #[error("{} evaluation point(s) lie inside the coupling surface (first: {:?})", .points.len(), .points.first())]
    InteriorPoint { points: Vec<usize> },
    #[error("incident field evaluated at its source point")]
    SingularPoint,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coupling parameter eta = {0} must have a nonzero real part")]
    Eta(Complex64),
    #[error("GMRES did not converge: relative residual {:.3e} after {} iterations", .0.final_residual(), .0.iterations)]
    NonConvergence(Box<SolveReport>),
    #[error("GMRES breakdown at iteration {iteration}")]
    Breakdown { iteration: usize },
    #[error("singular preconditioner block: {0}")]
    SingularPreconditioner(String),
    #[error("rank-deficient SPAI least-squares problem in column {0}")]
    Rank(usize),
    #[error("dense condition number requested for dimension {n} above cap {cap}; use an estimator instead")]
    CapExceeded { n: usize, cap: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown {registry} '{name}' (available: {available})")]
    UnknownStrategy {
        registry: &'static str,
        name: String,
        available: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
