use thiserror::Error;

#[derive(Error, Debug)]
pub enum TwpaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("matrix is singular or near-singular: {0}")]
    Singular(String),

    #[error("degenerate 2x2 matrix (|lambda_+ - lambda_-| <= 1e-12); projector split undefined")]
    DegenerateSplit,

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("gap closing at k = {k}: |omega - E(k)| = {distance:.3e}")]
    GapClosing { k: f64, distance: f64 },

    #[error("winding did not settle to an integer after refinement (min |omega - E(k)| = {0:.3e})")]
    WindingRefinement(f64),

    #[error("Bessel truncation tail above tolerance; increase n_max (tail = {0:.3e})")]
    BesselTail(f64),

    #[error("imaginary residue {0:.3e} above tolerance in a real-valued drive map")]
    ImaginaryResidue(f64),

    #[error("operation requires P = 0 (local-loss branch); got P = {0}")]
    NonZeroPump(f64),

    #[error("non-convergent tail: |lambda_backward| = {0} >= 1 (unstable regime)")]
    DivergentTail(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl From<ndarray_linalg::error::LinalgError> for TwpaError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        TwpaError::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TwpaError>;
