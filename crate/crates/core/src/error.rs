use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Operand shapes are incompatible with the requested operation.
    #[error("shape error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// Invalid argument or malformed input data.
    #[error("input error: {0}")]
    Input(String),

    /// Binary file does not conform to its format contract.
    #[error("format error at byte {offset}: {detail}")]
    Format { offset: u64, detail: String },

    /// A function produced a non-finite value where one is not allowed.
    #[error("evaluation error: {0}")]
    Eval(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    /// Checkpoint/config disagreement.
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn input(detail: impl Into<String>) -> Self {
        Error::Input(detail.into())
    }

    pub(crate) fn format(offset: u64, detail: impl Into<String>) -> Self {
        Error::Format {
            offset,
            detail: detail.into(),
        }
    }
}
