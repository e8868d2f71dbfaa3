use thiserror::Error;

/// Errors raised by the factorization kernels, weight operators and projectors.
#[derive(Debug, Error)]
pub enum DeimError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix must have at least one row and one column, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not symmetric: relative asymmetry {asymmetry:.3e}")]
    NotSymmetric { asymmetry: f64 },

    #[error("triangular factor is singular: zero diagonal at index {index}")]
    SingularFactor { index: usize },

    #[error("matrix is rank deficient: sigma_min = {sigma_min:.6e} (sigma_max = {sigma_max:.6e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("requested rank {requested} exceeds numerical rank {rank}; singular values: {sigma:?}")]
    RankTooLarge {
        requested: usize,
        rank: usize,
        sigma: Vec<f64>,
    },

    #[error("columns are not orthonormal: ||Q^T Q - I||_F = {defect:.3e}")]
    NotOrthonormal { defect: f64 },

    #[error("strong RRQR did not converge within the swap cap of {cap}")]
    SwapCapExceeded { cap: usize },

    #[error("SVD iteration failed to converge")]
    SvdFailed,

    #[error("weighted Gram-Schmidt breakdown at column {column}: W-norm {norm:.3e}")]
    Breakdown { column: usize, norm: f64 },

    #[error("certified bound violated: {what} = {value:.6e} > {bound:.6e}")]
    BoundViolation {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation requires a {expected} projector, got {found}")]
    WrongVariant {
        expected: &'static str,
        found: &'static str,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DeimError> = std::result::Result<T, E>;
