use thiserror::Error;

/// Errors produced by parsing, evaluation, integration, and the analysis layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("arity mismatch for `{name}` at byte {offset}: expected {expected}, got {got}")]
    ArityMismatch {
        name: String,
        offset: usize,
        expected: usize,
        got: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("missing parameter binding `{0}`")]
    MissingParam(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("state escaped the integration domain at t = {t}")]
    DomainEscape { t: f64 },
    #[error("no switching-manifold crossing within |t| <= {t_max}")]
    NoCrossing { t_max: f64 },
    #[error("grazing event: |X0 h| = {lie:.3e} below transversality tolerance {tol:.3e}")]
    Grazing { lie: f64, tol: f64 },
    #[error("hypothesis check failed at u = {u:?}: {reason}")]
    HypothesisFailed { u: Vec<f64>, reason: String },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("Newton iteration failed to converge: {0}")]
    NewtonDiverged(String),
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
