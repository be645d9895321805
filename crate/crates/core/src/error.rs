use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Variants are grouped by what went wrong rather than by module, so that
/// the runner can map them onto process exit codes without inspecting
/// messages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported sphere dimension {0} (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("grid resolution {resolution} cannot represent cutoff {cutoff} (max {max_cutoff})")]
    ResolutionTooSmall {
        resolution: usize,
        cutoff: usize,
        max_cutoff: usize,
    },

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies on the projection pole")]
    ProjectionPole,

    #[error("lift truncation residual {residual:.3e} exceeds cap {cap:.3e}; raise the cutoff")]
    TruncationResidual { residual: f64, cap: f64 },

    #[error("operator is not positive semi-definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator does not commute with the reflection (commutator norm {0:.3e})")]
    NotReflectionSymmetric(f64),

    #[error("test function {index} is not supported in the positive half: {reason}")]
    SupportViolation { index: usize, reason: String },

    #[error("effective sample size {ess:.1} below floor {floor:.1}")]
    EffectiveSampleSize { ess: f64, floor: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("cross-validation failed: {0}")]
    CrossValidation(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures that signal an unhealthy numerical run (truncation
    /// too coarse, importance weights degenerate) rather than a caller bug.
    pub fn is_numerical_health(&self) -> bool {
        matches!(
            self,
            Error::TruncationResidual { .. }
                | Error::EffectiveSampleSize { .. }
                | Error::NonFinite(_)
                | Error::NotPositive { .. }
                | Error::CrossValidation(_)
        )
    }
}
