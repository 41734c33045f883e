//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spaces do not match: {0}")]
    SpaceMismatch(String),

    #[error("operator is not Hermitian (max deviation {deviation:.3e}, scale {scale:.3e})")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error("state norm is {norm} (must be 1 within {tol:.1e})")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error(
        "Fock truncation too small: tail probability {tail:.3e} above {max_n} exceeds {limit:.1e}"
    )]
    TruncationTooSmall { max_n: usize, tail: f64, limit: f64 },

    #[error("integrator diverged: {0}")]
    IntegratorDiverged(String),

    #[error("step size too coarse: doubling the step count moved the result by {delta:.3e} (limit {limit:.1e})")]
    StepSize { delta: f64, limit: f64 },

    #[error("positivity violation: minimum eigenvalue {min_eigenvalue:.3e}")]
    PositivityViolation { min_eigenvalue: f64 },

    #[error("bath has no spectral description: {0}")]
    MissingSpectral(String),

    #[error("propagation failed at strength {strength:.6e}: {source}")]
    SweepPoint {
        strength: f64,
        #[source]
        source: Box<Error>,
    },
}
