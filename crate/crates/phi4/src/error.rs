use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("multiplier is not finite at eigenvalue {lambda}")]
    NonFiniteMultiplier { lambda: f64 },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("frequency cutoff too low for r = {r}: N = {n} leaves e^(-2r lambda) above 1e-12; need N >= {min_n}")]
    InsufficientCutoff { r: f64, n: usize, min_n: usize },
    #[error("refused: {0}")]
    Refused(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("only {got} usable dyadic levels in the fit window, need at least {needed}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("blow-up at t = {t}: sup norm {sup} exceeds {threshold}")]
    BlowUp { t: f64, sup: f64, threshold: f64 },
    #[error("integral hypothesis fails at s = {s}, t = {t}: integral {lhs} > bound {rhs}")]
    HypothesisViolated { s: f64, t: f64, lhs: f64, rhs: f64 },
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
