use thiserror::Error;

/// Errors surfaced by the referential-game engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute space holds {capacity} distinct specs but {required} are required")]
    Capacity { capacity: usize, required: usize },

    #[error("split has {available} objects but {requested} candidates were requested")]
    NotEnoughObjects { available: usize, requested: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training diverged at step {step}: non-finite {what} parameters")]
    Divergence { step: u64, what: &'static str },

    #[error("game exceeds complexity guard: {0}")]
    ComplexityGuard(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("missing artifact {}: run `{producer}` first", path.display())]
    MissingArtifact { path: std::path::PathBuf, producer: &'static str },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Capacity { .. } => "capacity",
            Error::NotEnoughObjects { .. } => "not_enough_objects",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Divergence { .. } => "divergence",
            Error::ComplexityGuard(_) => "complexity_guard",
            Error::UnknownMethod(_) => "unknown_method",
            Error::Parse { .. } => "parse",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
