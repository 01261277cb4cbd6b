use thiserror::Error;

use crate::fitting::FitResult;

pub type Result<T> = std::result::Result<T, QptError>;

#[derive(Debug, Error)]
pub enum QptError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (Frobenius residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("process matrix is not physical: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPhysical { min_eigenvalue: f64 },

    #[error("tomographically incomplete (condition number {condition_number:.3e}): {detail}")]
    TomographicallyIncomplete {
        condition_number: f64,
        detail: String,
    },

    #[error(
        "fit failed after {} iterations (constraint violation {:.3e})",
        best.iterations,
        best.constraint_violation
    )]
    FitFailed { best: Box<FitResult> },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl QptError {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            QptError::Io(_) => 3,
            QptError::TomographicallyIncomplete { .. } => 4,
            QptError::FitFailed { .. } => 6,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for QptError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            QptError::Io(e.into())
        } else {
            QptError::Format(e.to_string())
        }
    }
}
