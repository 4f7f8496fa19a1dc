use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = QlmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QlmError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid string path: {0}")]
    Path(String),
    #[error("invalid move: {0}")]
    Move(String),
    #[error("sector exceeds cap of {cap} states (reached {reached})")]
    SectorCap { cap: usize, reached: usize },
    #[error("sector not closed: configuration {config:#x} maps outside the basis under {term}")]
    NotClosed { config: u64, term: String },
    #[error("sector file {path}: {reason}")]
    SectorFile { path: PathBuf, reason: String },
    #[error("krylov evolution failed to converge: residual {residual:.3e} > tolerance {tol:.3e}")]
    KrylovNonConvergence { residual: f64, tol: f64 },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("schedule: {0}")]
    Schedule(String),
    #[error("empty shot table")]
    EmptyShots,
    #[error("config: {0}")]
    Config(String),
    #[error("compare: {0}")]
    Compare(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QlmError {
    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            QlmError::Geometry(_) => "geometry",
            QlmError::Path(_) => "path",
            QlmError::Move(_) => "move",
            QlmError::SectorCap { .. } => "sector_cap",
            QlmError::NotClosed { .. } => "not_closed",
            QlmError::SectorFile { .. } => "sector_file",
            QlmError::KrylovNonConvergence { .. } => "krylov",
            QlmError::NotNormalized(_) => "not_normalized",
            QlmError::Dimension { .. } => "dimension",
            QlmError::Schedule(_) => "schedule",
            QlmError::EmptyShots => "empty_shots",
            QlmError::Config(_) => "config",
            QlmError::Compare(_) => "compare",
            QlmError::Io(_) => "io",
            QlmError::Json(_) => "json",
        }
    }
}
