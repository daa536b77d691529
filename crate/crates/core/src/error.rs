use thiserror::Error;

/// Errors raised by the geometry, spectral and flow pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus tau must have positive imaginary part, got Im(tau) = {0}")]
    NonPositiveImaginaryModulus(f64),

    #[error("grid resolution {nx}x{ny} invalid: both must be even and at least 4")]
    BadResolution { nx: usize, ny: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("input to the inverse z-derivative has non-zero mean {mean:e} (tolerance {tol:e})")]
    NonZeroMeanInput { mean: f64, tol: f64 },

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("degenerate immersion: EG - F^2 = {det:e} at node ({j}, {k})")]
    DegenerateImmersion { det: f64, j: usize, k: usize },

    #[error("immersion is not conformal: residual {residual:e} exceeds {threshold:e}")]
    NotConformal { residual: f64, threshold: f64 },

    #[error("spinor branch transport inconsistent: {0}")]
    BranchInconsistency(String),

    #[error("Dirac residual {residual:e} exceeds tolerance {tol:e}")]
    DiracResidualTooLarge { residual: f64, tol: f64 },

    #[error("Weierstrass image does not close on the torus: period defect {defect:e}")]
    NonPeriodicImage { defect: f64 },

    #[error("potential is not real: max |Im U| = {max_imag:e}")]
    NonRealPotential { max_imag: f64 },

    #[error("inversion center is {distance:e} from the surface, closer than the required {required:e}")]
    CenterOnSurface { distance: f64, required: f64 },

    #[error("invalid conformal transform: {0}")]
    InvalidTransform(String),

    #[error("truncation order {m} too small: free symbol margin {margin:.3} below required {required:.3}")]
    TruncationTooSmall { m: usize, margin: f64, required: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ODE integration failed: {0}")]
    IntegrationFailure(String),

    #[error("flow blew up: sup norm grew from {before:e} to {after:e} in one step")]
    BlowupDetected { before: f64, after: f64 },

    #[error("no conserving candidate: best relative h3 drift {best_drift:e} at c = {best_c}")]
    NoConservingCandidate { best_c: f64, best_drift: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("parse error: {0}")]
    Parse(String),

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
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
