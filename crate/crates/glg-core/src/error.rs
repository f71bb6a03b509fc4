use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("point is not critical (|grad L| = {0:e})")]
    NotCritical(f64),
    #[error("orbit is not free at this point")]
    NotFreeOrbit,
    #[error("moment level is not attainable on this orbit: {0}")]
    Unattainable(String),
    #[error("region lies outside the grid")]
    RegionOutOfBounds,
    #[error("input is not a solution (residual {0:e})")]
    InputNotSolution(f64),
    #[error("comparison hypothesis violated at node ({t}, {s}) by {excess:e}")]
    HypothesisViolated { t: usize, s: usize, excess: f64 },
    #[error("path endpoint has not decayed (defect {0:e})")]
    EndpointNotDecayed(f64),
    #[error("step too large: dt * |Hess| = {0}")]
    StepTooLarge(f64),
    #[error("fit unstable (R^2 = {0})")]
    FitUnstable(f64),
    #[error("grid extends beyond the profile radius")]
    GridExceedsProfile,
    #[error("degenerate form (a = 0)")]
    DegenerateForm,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("degenerate residues: leading coefficient vanishes")]
    DegenerateResidues,
    #[error("linear solver failed: {0}")]
    LinearSolve(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
