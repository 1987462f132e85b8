use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum GibbsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cascade did not converge after {iterations} iterations (last sup-difference {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("grid window [{have_lo}, {have_hi}] does not contain the required window [{need_lo}, {need_hi}]")]
    WindowTooSmall {
        have_lo: f64,
        have_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("singular linear system")]
    Singular,
    #[error("numerical inconsistency: {0}")]
    Numerical(String),
}

impl GibbsError {
    /// True for errors caused by inputs that violate a documented precondition.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            GibbsError::DimensionMismatch(_)
                | GibbsError::Precondition(_)
                | GibbsError::InvalidInput(_)
                | GibbsError::WindowTooSmall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, GibbsError>;
