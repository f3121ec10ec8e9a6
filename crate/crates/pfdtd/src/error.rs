use thiserror::Error;

/// Errors produced by the engine and the file codecs.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or precondition violation detected before any
    /// stepping starts.
    #[error("config error: {0}")]
    Config(String),

    /// Array shapes inconsistent with the grid they are used with.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A required input artifact (manifest, record, probe CSV) is absent.
    #[error("missing prerequisite artifact: {0}")]
    MissingArtifact(String),

    /// A member simulation or the pipeline itself failed mid-run.
    #[error("simulation failure: {0}")]
    Simulation(String),

    /// Malformed or truncated persisted data.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code mapping: 2 config, 3 simulation/format/io, 4 missing artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::ShapeMismatch(_) => 2,
            Error::MissingArtifact(_) => 4,
            _ => 3,
        }
    }
}
