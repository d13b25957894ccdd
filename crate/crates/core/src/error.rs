use thiserror::Error;

/// Errors raised by estimators, tests and the simulation harness.
#[derive(Debug, Error)]
pub enum EcdmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A block has zero estimated trace of squared covariance, so the
    /// null scale is zero and the standardized statistic is undefined.
    #[error("degenerate scale: block {block} has W = 0{}", column_note(.constant_columns))]
    DegenerateScale {
        block: usize,
        /// 1-based column indices (within the full matrix) that are constant.
        constant_columns: Vec<usize>,
    },

    #[error("nonpositive scale: W1(SR) * W2(SR) = {0} <= 0")]
    NonpositiveScale(f64),

    #[error("undefined diagnostic: {0}")]
    UndefinedDiagnostic(String),

    #[error("unsupported assumption: {0}")]
    UnsupportedAssumption(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn column_note(cols: &[usize]) -> String {
    if cols.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
        format!(" (constant columns: {})", list.join(", "))
    }
}

pub type Result<T> = std::result::Result<T, EcdmError>;

pub(crate) fn invalid(msg: impl Into<String>) -> EcdmError {
    EcdmError::InvalidArgument(msg.into())
}
