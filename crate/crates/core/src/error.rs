use thiserror::Error;

/// Errors produced by the recovery library.
#[derive(Debug, Error)]
pub enum ItaleError {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("label {0} is not on the label grid")]
    InvalidLabel(f64),

    #[error("non-finite values at iteration {iteration}")]
    NumericBlowup { iteration: usize },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ItaleError {
    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            ItaleError::InvalidSize(_) => "invalid_size",
            ItaleError::Dimension { .. } => "dimension",
            ItaleError::InvalidParameter(_) => "invalid_parameter",
            ItaleError::InvalidGraph(_) => "invalid_graph",
            ItaleError::InvalidNetwork(_) => "invalid_network",
            ItaleError::InvalidLabel(_) => "invalid_label",
            ItaleError::NumericBlowup { .. } => "numeric_blowup",
            ItaleError::Format { .. } => "format",
            ItaleError::Io(_) => "io",
            ItaleError::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, ItaleError>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(ItaleError::Dimension { expected, got });
    }
    Ok(())
}
