use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GammaError {
    #[error("gamma has a pole at x = {x}")]
    Pole { x: f64 },
    #[error("gamma overflows at x = {x}")]
    Overflow { x: f64 },
    #[error("gamma argument is NaN")]
    NotANumber,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Gamma(#[from] GammaError),
    #[error("fractional order must lie in (0, 1), got {0}")]
    InvalidOrder(f64),
    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("Mittag-Leffler E[{rho}, {mu}]({z}) did not reach the target accuracy (estimate {estimate:e})")]
    NonConvergence {
        rho: f64,
        mu: f64,
        z: f64,
        estimate: f64,
    },
    #[error("coefficient vector is bound to a different spectrum")]
    SpectrumMismatch,
    #[error("operation not supported for {kind} spectra")]
    UnsupportedSpectrum { kind: String },
    #[error(
        "recovery divisor underflows for mode {mode} (lambda = {lambda:e}, divisor = {divisor:e})"
    )]
    Underflow {
        mode: usize,
        lambda: f64,
        divisor: f64,
    },
    #[error("final data is identically zero")]
    ZeroData,
    #[error("symmetric eigen-solver failed to converge for n = {n}")]
    EigenSolver { n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
