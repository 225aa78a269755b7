use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] w2s_core::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit status: 1 config, 2 verification, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        use w2s_core::Error as E;
        match self {
            LabError::Core(E::NonConvergence { .. } | E::InternalInconsistency(_)) => 3,
            LabError::Numerical(_) => 3,
            LabError::Verification(_) => 2,
            _ => 1,
        }
    }
}
