use thiserror::Error;

/// Failure categories shared by every module of the lab.
///
/// The variants map one-to-one onto the exit codes of the command line
/// front end (see [`LabError::exit_code`]).
#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Precondition(_) | LabError::Contract(_) => 3,
            LabError::Numerical(_) => 4,
            LabError::Resource(_) => 5,
            LabError::Io(_) => 1,
        }
    }

    /// Short machine-readable category tag.
    pub fn category(&self) -> &'static str {
        match self {
            LabError::Config(_) => "parse",
            LabError::Precondition(_) => "precondition",
            LabError::Contract(_) => "contract",
            LabError::Numerical(_) => "numerical",
            LabError::Resource(_) => "resource",
            LabError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn precondition(msg: impl Into<String>) -> LabError {
    LabError::Precondition(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> LabError {
    LabError::Numerical(msg.into())
}
