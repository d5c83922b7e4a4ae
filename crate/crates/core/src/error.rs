use thiserror::Error;

/// Failures reported by the numerical layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    SpecMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("negative-support norm {norm:.3e} exceeds tolerance {tol:.3e}")]
    SupportViolation { norm: f64, tol: f64 },
    #[error("operator is not unitary: deviation {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("operator is not a contraction: norm {norm:.17e}")]
    NotContraction { norm: f64 },
    #[error("operator is not Hermitian: deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("operator is not an orthogonal projector: deviation {deviation:.3e}")]
    NotProjector { deviation: f64 },
    #[error("numerical rank {rank} below expected {expected} (smallest singular value {sigma_min:.3e})")]
    RankDeficient { rank: usize, expected: usize, sigma_min: f64 },
    #[error("eigenvalue {value:.17e} outside the admissible interval")]
    SpectrumOutOfRange { value: f64 },
    #[error("commutation residual {residual:.3e} exceeds {tol:.3e}")]
    Commutation { residual: f64, tol: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear algebra failure: {0}")]
    Decomposition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
