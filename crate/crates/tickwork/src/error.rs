use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by clock construction, solvers and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The effective generator has (near-)imaginary spectrum, so resolvent
    /// moments do not exist. Carries the offending eigenvalue pair
    /// `(lambda_i, lambda_j)` with `lambda_i + conj(lambda_j) ~ 0`.
    #[error("singular generator: eigenvalue pair ({0}, {1}) has |lambda_i + conj(lambda_j)| = {2:.3e}")]
    SingularGenerator(Complex64, Complex64, f64),

    #[error("clock does not tick: waiting-time mass deficit {deficit:.3e} at t = {t_max:.3e}")]
    NonTickingClock { deficit: f64, t_max: f64 },

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("grid refinement failed: lowest eigenvalues changed by {change:.3e} (> {tol:.3e}) when doubling N to {n}")]
    GridRefinement { change: f64, tol: f64, n: usize },

    #[error("numerical accuracy not reached: {0}")]
    Accuracy(String),

    #[error("linear algebra backend: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
