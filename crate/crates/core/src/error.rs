use thiserror::Error;

/// Errors raised by field construction, numerical routines and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for grid with {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("spectral gap violated at grid index {index}: eigenvalue {eigenvalue} lies in ({delta}, {upper})", upper = 1.0 - .delta)]
    GapViolation {
        index: usize,
        eigenvalue: f64,
        delta: f64,
    },
    #[error("point {z_re}+{z_im}i is within 1e-12 of the spectrum")]
    NearSpectrum { z_re: f64, z_im: f64 },
    #[error("matrix at grid index {index} is numerically singular (min singular value {sigma_min:e})")]
    NearSingular { index: usize, sigma_min: f64 },
    #[error("contour quadrature did not converge after {doublings} doublings (last change {last_change:e})")]
    QuadratureNonConvergence { doublings: usize, last_change: f64 },
    #[error("rank changes across the grid (rank {found} at index {index}, expected {expected})")]
    RankChange {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("Chern rounding residual {residual} too large (grid too coarse)")]
    ChernResidual { residual: f64 },
    #[error("not a projection field: {0}")]
    NotProjection(String),
    #[error("gap never certified after {retries} retries")]
    RetriesExhausted { retries: usize },
    #[error("grid too coarse: {0}")]
    CoarseGrid(String),
    #[error("invalid field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Failures of a certification step (as opposed to bad input or I/O).
    pub fn is_certification_failure(&self) -> bool {
        matches!(
            self,
            Error::GapViolation { .. }
                | Error::RetriesExhausted { .. }
                | Error::ChernResidual { .. }
                | Error::QuadratureNonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
