use std::path::PathBuf;

/// Errors produced across the solver crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid resolution must be even and at least 8, got {0}")]
    InvalidGrid(usize),

    #[error("conjugate symmetry violated: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    SymmetryViolation { defect: f64, tol: f64 },

    #[error("mean-free violation: |c_0| = {0:.3e}")]
    MeanFreeViolation(f64),

    #[error("invalid filter parameters: {0}")]
    InvalidFilter(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("initial condition '{preset}' needs at least {needed} modes per axis, grid has {got}")]
    PresetGridMismatch {
        preset: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("solution blew up (non-finite coefficient) at t = {t:.6}, step {step}")]
    BlowUp { t: f64, step: u64 },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("diagnostic records are not strictly increasing in time at index {0}")]
    RecordOrdering(usize),

    #[error("symbol audit failed: {0}")]
    AuditFailure(String),

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("snapshot format error in {path}: {msg}")]
    Snapshot { path: PathBuf, msg: String },

    #[error("output directory {0} is locked by another run")]
    OutputLocked(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
