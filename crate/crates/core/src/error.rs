use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    MeshInvalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate element {cell}: {reason}")]
    ElementDegenerate { cell: usize, reason: &'static str },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("configuration error: {0}")]
    Configuration(String),
}

pub type Result<T> = core::result::Result<T, Error>;
