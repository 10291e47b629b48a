use std::path::PathBuf;

/// Errors surfaced by the solver, the studies and the command line.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Core(#[from] smagvem_core::Error),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("linear system is numerically singular (relative residual {residual:.3e})")]
    Singular { residual: f64 },
    #[error("Newton iteration {iteration}: {source}")]
    Newton { iteration: usize, source: Box<SolverError> },
    #[error("continuation at Re = {re}: {source}")]
    Continuation { re: f64, source: Box<SolverError> },
    #[error("Newton did not converge: {0}")]
    NotConverged(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("reference data: {0}")]
    Reference(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

impl SolverError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 2 configuration, 3 solver failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::InvalidArgument(_) | Self::Reference(_) => 2,
            Self::Core(e) => match e {
                smagvem_core::Error::ElementDegenerate { .. } | smagvem_core::Error::Assembly(_) => 3,
                _ => 2,
            },
            Self::Io { .. } | Self::Format(_) => 4,
            Self::Newton { source, .. } | Self::Continuation { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
