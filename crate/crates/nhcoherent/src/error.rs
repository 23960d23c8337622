use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square with even size, got {rows}x{cols}")]
    NotSquareEven { rows: usize, cols: usize },

    #[error("{what} is not symmetric: max |A - A^T| = {max_dev:.3e}")]
    NotSymmetric { what: &'static str, max_dev: f64 },

    #[error("{what} is not positive definite: min eigenvalue {min_eig:.3e} (threshold {threshold:.3e})")]
    NotPositiveDefinite {
        what: &'static str,
        min_eig: f64,
        threshold: f64,
    },

    #[error("{what} is ill-conditioned: condition estimate {cond:.3e} exceeds 1e12")]
    IllConditioned { what: &'static str, cond: f64 },

    #[error("{what} is singular")]
    Singular { what: &'static str },

    #[error("frame is not a positive Lagrangian subspace: {reason}")]
    NotPositiveLagrangian { reason: String },

    #[error("metric is not symplectic: max |G Omega G - Omega| = {defect:.3e}")]
    NotSymplecticMetric { defect: f64 },

    #[error("complex structure invalid: {reason}")]
    InvalidStructure { reason: String },

    #[error("transported shape lost positivity: min eigenvalue of Im B = {min_eig:.3e}")]
    PositivityLoss { min_eig: f64 },

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("coefficient provider failed at t = {t}: {message}")]
    ProviderFailure { t: f64, message: String },

    #[error("time span invalid: t1 = {t1} must be >= t0 = {t0}")]
    InvalidSpan { t0: f64, t1: f64 },

    #[error("grid too coarse: need spacing <= {required:.3e}, got {actual:.3e}")]
    GridTooCoarse { required: f64, actual: f64 },

    #[error("state not resolved near grid boundary: |psi|/peak = {ratio:.3e} within 5% of the edge")]
    BoundaryMass { ratio: f64 },

    #[error("momentum grid aliases: |p| up to {p_max:.3e} exceeds Nyquist bound {nyquist:.3e}")]
    Aliasing { p_max: f64, nyquist: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code class used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidParameter(_) | Error::Io(_) => 2,
            Error::PositivityLoss { .. } => 3,
            _ => 4,
        }
    }
}
