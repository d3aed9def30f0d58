use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EcmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("element {element}: {reason}")]
    Geometry { element: usize, reason: String },
    #[error("mesh construction failed: {0}")]
    Mesh(String),
    #[error("element {element}: non-finite value during assembly")]
    Assembly { element: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("newton iteration did not converge after {iterations} iterations; residual history {history:?}")]
    NoConvergence { iterations: usize, history: Vec<[f64; 2]> },
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EcmError {
    pub fn is_config(&self) -> bool {
        matches!(self, EcmError::Config(_) | EcmError::InvalidInput(_) | EcmError::Mesh(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EcmError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, EcmError>;
