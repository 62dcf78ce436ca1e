use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("k = {k} out of range (valid: 1..={max})")]
    KOutOfRange { k: usize, max: usize },

    #[error("degenerate sample: points are collinear or coincident")]
    DegenerateSample,

    #[error("too few neighbors: need {needed}, got {got}")]
    TooFewNeighbors { needed: usize, got: usize },

    #[error("every sample was degenerate after {attempts} attempts")]
    PersistentDegeneracy { attempts: usize },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid shape spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: normal has norm {norm}, expected 1")]
    NormalNotUnit { line: usize, norm: f64 },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
