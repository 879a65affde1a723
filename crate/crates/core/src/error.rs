use std::path::PathBuf;

/// Errors raised anywhere in the solver kit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid needs at least 3 boundaries, got {0}")]
    TooFewElements(usize),

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("logarithmic singularity: {0}")]
    LogSingularity(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimate {estimate:e}, error bound {error_bound:e}")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        estimate: f64,
        error_bound: f64,
    },

    #[error("integrand is not finite at x = {0}")]
    NonFiniteIntegrand(f64),

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepSizeUnderflow {
        t: f64,
        step: f64,
        last_state: Vec<f64>,
    },

    #[error("right-hand side produced a non-finite value at t = {0}")]
    NonFiniteRhs(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
