use thiserror::Error;

#[derive(Debug, Error)]
pub enum FsiError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid parameters: {0}")]
    Parameters(String),
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("assembly defect: {0}")]
    Assembly(String),
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("compatibility condition violated: {0}")]
    Compatibility(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("spectral check failed: {0}")]
    Spectrum(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FsiError> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(FsiError::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
